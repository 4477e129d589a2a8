//! The two reference networks shipped with the crate.
//!
//! * `diamond`: entry link 1 feeds node `a`, which splits half/half into
//!   link 2 (`a -> b`) and link 3 (`a -> c`); link 4 runs `c -> b` and link 5
//!   drains `b` to the exit. Links 1, 4, 5 have jam density 30 and critical
//!   flow 15, links 2, 3 jam density 100 and critical flow 50.
//! * `loop`: entry link 1 feeds `a`, link 2 runs `a -> b`, and `b` sends half
//!   of its flow back to `a` over link 3 and half to the exit over link 4.
//!   Every link has jam density 30 and critical flow 15.
//!
//! See `fixtures/README.md` for how these topologies were reconstructed.

use crate::network::Network;

pub const DIAMOND_JSON: &str = include_str!("../fixtures/diamond.json");
pub const LOOP_JSON: &str = include_str!("../fixtures/loop.json");
/// Loop schedule: input 3 for five time units, then 6, period 10.
pub const LOOP_SCHEDULE_JSON: &str = include_str!("../fixtures/loop_periodic.json");
/// Diamond schedule: input 4 for ten time units, then 10, period 20.
pub const DIAMOND_SCHEDULE_JSON: &str = include_str!("../fixtures/diamond_periodic.json");

pub fn diamond() -> Network {
    Network::from_json(DIAMOND_JSON).expect("bundled diamond fixture parses")
}

pub fn loop_network() -> Network {
    Network::from_json(LOOP_JSON).expect("bundled loop fixture parses")
}
