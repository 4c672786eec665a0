//! Shared fixtures for the benchmark targets.

use bpve_core::offspring::OffspringLaw;
use bpve_core::survival::SurvivalTable;

pub fn power_tail() -> OffspringLaw {
    OffspringLaw::power_tail(0.5, 1.5).expect("valid law")
}

pub fn critical_power_tail() -> OffspringLaw {
    power_tail().criticalize().expect("supercritical")
}

pub fn power_tail_table(horizon: usize) -> SurvivalTable {
    SurvivalTable::build(&critical_power_tail(), horizon, 1e-9).expect("table")
}
