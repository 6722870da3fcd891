//! Loads a JSON problem file, solves it and prints the window diagnostics
//! the `solve` subcommand writes.

use sobdde::problem::ProblemSpec;
use sobdde::solve;

fn main() -> sobdde::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/examples/specs/mackey_glass.json"
        )
        .into()
    });
    let p = ProblemSpec::load(path.as_ref())?.build()?;
    let res = solve(&p.phi, p.r, &p.model, &p.cfg)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&res.windows[..res.windows.len().min(3)])?
    );
    println!("t_reached = {}, escaped = {}", res.t_reached, res.escaped);
    Ok(())
}
