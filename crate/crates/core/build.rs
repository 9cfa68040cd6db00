// LAPACK comes from the system OpenBLAS; set FARMING_LAPACK_LIB to link another library.
fn main() {
    println!("cargo:rerun-if-env-changed=FARMING_LAPACK_LIB");
    let lib = std::env::var("FARMING_LAPACK_LIB").unwrap_or_else(|_| "openblas".into());
    println!("cargo:rustc-link-lib=dylib={lib}");
}
