#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(task) = dtdb::task::parse_task(text) {
        let printed = task.to_gtf();
        let again = dtdb::task::parse_task(&printed).expect("printed task reparses");
        assert_eq!(again.to_gtf(), printed);
    }
});
