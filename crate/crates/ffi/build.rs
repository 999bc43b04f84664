fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("manifest dir");
    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("PPDE_H".to_string()),
        cpp_compat: true,
        documentation: true,
        header: Some("/* C interface of the ppde laboratory; generated by cbindgen. */".to_string()),
        enumeration: cbindgen::EnumConfig {
            prefix_with_name: true,
            ..Default::default()
        },
        ..Default::default()
    };
    match cbindgen::Builder::new().with_crate(&crate_dir).with_config(config).generate() {
        Ok(bindings) => {
            let out = std::path::Path::new(&crate_dir).join("include").join("ppde.h");
            std::fs::create_dir_all(out.parent().unwrap()).expect("include dir");
            bindings.write_to_file(out);
        }
        Err(e) => {
            // header generation failure must not break library builds
            println!("cargo:warning=cbindgen failed: {e}");
        }
    }
    println!("cargo:rerun-if-changed=src/lib.rs");
}
