#![no_main]

use libfuzzer_sys::fuzz_target;
use wslchain::dynamics::StateSpec;

fuzz_target!(|input: &str| {
    if let Ok(spec) = StateSpec::parse(input) {
        // Display must produce a spec that parses back to the same sites.
        let again = StateSpec::parse(&spec.to_string()).expect("canonical form parses");
        assert_eq!(again, spec);
        if spec.n_sites() <= 12 {
            let state = spec.to_state();
            assert!((state.norm() - 1.0).abs() < 1e-9);
        }
    }
});
