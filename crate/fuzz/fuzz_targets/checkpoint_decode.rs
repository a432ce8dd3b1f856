#![no_main]
use libfuzzer_sys::fuzz_target;

use elsim::formats::{decode_checkpoint, encode_checkpoint};

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = decode_checkpoint(data) {
        let again = encode_checkpoint(&c);
        assert!(decode_checkpoint(&again).is_ok());
    }
});
