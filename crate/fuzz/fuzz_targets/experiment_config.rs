#![no_main]

use libfuzzer_sys::fuzz_target;
use wslchain::config::{ExperimentConfig, Overrides};

fuzz_target!(|input: &str| {
    if let Ok(cfg) = ExperimentConfig::from_toml_str(input, &Overrides::default()) {
        cfg.validate().expect("accepted configs validate");
        let back: ExperimentConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back.hash(), cfg.hash());
    }
});
