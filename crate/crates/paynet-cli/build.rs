use std::process::Command;

fn main() {
    let describe = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|out| out.status.success())
        .and_then(|out| String::from_utf8(out.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unreleased".to_string());
    println!(
        "cargo:rustc-env=BUILD_VERSION=v{}-{}",
        env!("CARGO_PKG_VERSION"),
        describe
    );
    println!("cargo:rerun-if-changed=../../.git/HEAD");
}
