use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("DREIDEL_H".into()),
        cpp_compat: true,
        documentation: true,
        enumeration: cbindgen::EnumConfig {
            prefix_with_name: true,
            rename_variants: cbindgen::RenameRule::ScreamingSnakeCase,
            ..Default::default()
        },
        ..Default::default()
    };
    match cbindgen::generate_with_config(&dir, config) {
        Ok(b) => {
            b.write_to_file(dir.join("include/dreidel.h"));
        }
        Err(e) => println!("cargo:warning=header not regenerated: {e}"),
    }
}
