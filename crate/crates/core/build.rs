// ndarray-linalg is used without a bundled LAPACK backend; link the system one.
fn main() {
    let lib = std::env::var("CCSB_LAPACK_LIB").unwrap_or_else(|_| "openblas".to_string());
    println!("cargo:rerun-if-env-changed=CCSB_LAPACK_LIB");
    println!("cargo:rustc-link-lib={lib}");
}
