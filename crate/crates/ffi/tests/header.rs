//! The generated header must compile as C and C++ and declare every entry point.

use std::path::Path;
use std::process::Command;

fn header() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("mvpareto.h")
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    for f in [
        "mvp_portfolio_new",
        "mvp_portfolio_preset",
        "mvp_portfolio_free",
        "mvp_joint_ddf",
        "mvp_joint_pdf",
        "mvp_covariance",
        "mvp_conditional_ddf_eq",
        "mvp_centred_regression",
        "mvp_minima_ddf",
        "mvp_maxima_ddf",
        "mvp_var",
        "mvp_cte",
        "mvp_economic_cte",
        "mvp_calibrate_sigma",
        "mvp_sample",
        "mvp_last_error_message",
        "typedef struct MvpPortfolio MvpPortfolio",
        "MVP_STATUS_INFINITE_MOMENT = 5",
    ] {
        assert!(text.contains(f), "header lacks {f}");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        if Command::new(compiler).arg("--version").output().is_err() {
            eprintln!("{compiler} not found, skipping");
            continue;
        }
        let out = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(header())
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{compiler}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
