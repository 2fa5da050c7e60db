#![no_main]

use libfuzzer_sys::fuzz_target;
use wslchain::model::DeviceParams;

fuzz_target!(|input: &str| {
    if let Ok(params) = DeviceParams::from_toml_str(input) {
        params.validate().expect("parsed parameters validate");
        let back = DeviceParams::from_toml_str(&params.to_toml_string()).expect("round trip");
        assert_eq!(back, params);
    }
});
