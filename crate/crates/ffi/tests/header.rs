use std::process::Command;

/// The generated header must compile as C and as C++.
#[test]
fn header_compiles() {
    let src = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("genquot_header_use.c");
    std::fs::write(
        &src,
        "#include \"genquot.h\"\nint main(void) {\n  GqBody *b = 0;\n  GqStatus s = gq_body_sample(2, 4, 1, 0, &b);\n  gq_body_free(b);\n  return s == GQ_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    for (cc, std) in [("cc", "-std=c11"), ("c++", "-std=c++17")] {
        let Ok(out) = Command::new(cc)
            .args([std, "-Wall", "-Werror", "-fsyntax-only", "-I"])
            .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
            .args(if cc == "c++" { vec!["-x", "c++"] } else { vec![] })
            .arg(&src)
            .output()
        else {
            eprintln!("{cc} not found, skipping");
            continue;
        };
        assert!(out.status.success(), "{cc}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
