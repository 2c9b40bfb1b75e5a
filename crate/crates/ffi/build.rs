//! Regenerates include/rlopt.h from the public extern "C" surface.
//!
//! Header generation is best-effort: if cbindgen cannot run (e.g. a
//! vendored build without the tool), the checked-in header is kept as-is.

use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = match cbindgen::Config::from_file(crate_dir.join("cbindgen.toml")) {
        Ok(c) => c,
        Err(e) => {
            println!("cargo:warning=cbindgen config not loaded ({e}); keeping existing header");
            return;
        }
    };
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            bindings.write_to_file(crate_dir.join("include").join("rlopt.h"));
        }
        Err(e) => {
            println!("cargo:warning=cbindgen failed ({e}); keeping existing header");
        }
    }
}
