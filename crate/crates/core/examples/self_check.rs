//! Runs the built-in invariant checks and prints one line per check.

fn main() -> mathieu::Result<()> {
    for c in mathieu::validate::run_all()? {
        println!("{} {:<40} {:.3e} <= {:.1e}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    Ok(())
}
