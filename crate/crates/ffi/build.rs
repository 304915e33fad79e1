use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("MEASUREKIT_H".into()),
        cpp_compat: true,
        documentation: true,
        header: Some("/* Generated by cbindgen. Do not edit. */".into()),
        ..Default::default()
    };
    match cbindgen::Builder::new().with_crate(&crate_dir).with_config(config).generate() {
        Ok(bindings) => {
            bindings.write_to_file(crate_dir.join("include/measurekit.h"));
        }
        Err(e) => println!("cargo:warning=header generation failed: {e}"),
    }
}
