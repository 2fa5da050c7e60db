#![no_main]

use libfuzzer_sys::fuzz_target;
use wslchain::model::ObservableKind;

fuzz_target!(|input: &str| {
    if let Ok(kind) = input.parse::<ObservableKind>() {
        assert_eq!(kind.name().parse::<ObservableKind>().unwrap(), kind);
    }
});
