//! With the delay `t + c` the solution is `phi(0) + t phi(-c)`, so its
//! derivative in `c` jumps wherever the history has a kink.

use sobdde::analysis::{counterexample_time_dependent, kinked_history};

fn main() -> sobdde::Result<()> {
    let phi = kinked_history(1000)?;
    println!("   c    value    left_dq  right_dq");
    for c in [0.2, 0.4, 0.5, 0.6, 0.8] {
        let ce = counterexample_time_dependent(&phi, c, 1.0)?;
        println!(
            "{c:4.1} {:8.4} {:9.4} {:9.4}",
            ce.value[0], ce.left_dq[0], ce.right_dq[0]
        );
    }
    Ok(())
}
