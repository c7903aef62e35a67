//! Fuzz the config loader: arbitrary bytes must never panic it, and any
//! config it accepts must actually resolve to a usable world sheet.

#![no_main]

use libfuzzer_sys::fuzz_target;
use lightcone::config::load_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = load_config(text) else {
        return;
    };
    // accepted configs are fully usable: the sheet builds and the
    // numeric knobs are sane
    let spec = cfg.sheet_spec().expect("accepted config must resolve");
    let _ = cfg.grid.u_counts(spec.space_dims());
    assert!(cfg.tolerances.fd_step.is_finite());
    assert!(cfg.tolerances.sep_cells >= 0.0);
});
