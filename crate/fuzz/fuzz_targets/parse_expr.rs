//! Fuzz the expression parser: parsing must never panic, and anything it
//! accepts must print back to text that reparses to the identical tree.

#![no_main]

use libfuzzer_sys::fuzz_target;
use lightcone::expr::{parse_expr, unparse};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let vars: Vec<String> = vec!["u1".into(), "u2".into(), "t".into()];
    let Ok(tree) = parse_expr(text, &vars) else {
        return;
    };
    let printed = unparse(&tree, &vars);
    let reparsed = parse_expr(&printed, &vars)
        .unwrap_or_else(|e| panic!("printed form `{printed}` failed to parse: {e}"));
    assert_eq!(tree, reparsed, "round trip changed the tree for `{printed}`");
    assert_eq!(
        printed,
        unparse(&reparsed, &vars),
        "printing is not idempotent"
    );
});
