use genquot::body::RandomQuotientBody;
use genquot::constructions::{dispatch, reverify, L1Config, L2Config, Witness, WitnessRecord};
use genquot::experiments::Thresholds;
use genquot::sampler::SeedSpec;
use rayon::prelude::*;

fn configs() -> (L1Config, L2Config) {
    let th = Thresholds::builtin();
    (
        L1Config { c_cal: th.get("l1_c_cal").unwrap(), ..L1Config::default() },
        L2Config { c_cal: th.get("l2_c_cal").unwrap(), ..L2Config::default() },
    )
}

#[test]
fn dispatcher_reaches_sqrt_dimension() {
    let (l1, l2) = configs();
    for (d, big_n) in [(16usize, 256usize), (25, 625)] {
        let hits: usize = (0..50u64)
            .into_par_iter()
            .map(|s| {
                let seed = SeedSpec::new(s, 0);
                let body = RandomQuotientBody::sample(d, big_n, seed).unwrap();
                let (dim, c) = match dispatch(&body, &l1, &l2, seed.derive(1)) {
                    Ok(w @ Witness::L1(_)) => (w.dim(), l1.c_cal),
                    Ok(w @ Witness::L2(_)) => (w.dim(), l2.c_cal),
                    Err(_) => return 0,
                };
                usize::from(dim as f64 >= c * (d as f64).sqrt())
            })
            .sum();
        assert!(hits >= 45, "(d, N) = ({d}, {big_n}): {hits}/50");
    }
}

#[test]
fn witness_records_survive_json_and_reverify() {
    let (l1, l2) = configs();
    for (n, big_n) in [(36usize, 1296usize), (9, 81)] {
        let seed = SeedSpec::new(3, 0);
        let body = RandomQuotientBody::sample(n, big_n, seed).unwrap();
        let rec = WitnessRecord::from(&dispatch(&body, &l1, &l2, seed.derive(1)).unwrap());
        let back = WitnessRecord::from_json(&rec.to_json()).unwrap();
        assert_eq!(back, rec);
        assert!(reverify(&body, &back).unwrap() <= 1e-9);
    }
}
