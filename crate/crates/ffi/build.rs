use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config =
        cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")).expect("cbindgen.toml");
    match cbindgen::generate_with_config(&crate_dir, config) {
        Ok(bindings) => {
            bindings.write_to_file(crate_dir.join("include/mmi_lab.h"));
        }
        // A syntax error is reported properly by rustc; don't mask it here.
        Err(e @ cbindgen::Error::ParseSyntaxError { .. }) => eprintln!("cbindgen: {e}"),
        Err(e) => panic!("cbindgen: {e}"),
    }
}
