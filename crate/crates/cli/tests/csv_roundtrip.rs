//! Round trip of the CSV writer and reader on arbitrary finite and special values.

use blowup_cli::rundir::{csv_bytes, read_csv};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => any::<f64>().prop_filter("finite", |v| v.is_finite()),
        1 => Just(f64::INFINITY),
        1 => Just(f64::NEG_INFINITY),
        1 => Just(0.0),
    ]
}

proptest! {
    #[test]
    fn written_tables_read_back_bit_for_bit(rows in proptest::collection::vec(proptest::collection::vec(value(), 3), 0..30)) {
        let bytes = csv_bytes(&["a", "b", "c"], &rows).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, &bytes).unwrap();
        let (header, back) = read_csv(&path).unwrap();
        prop_assert_eq!(header, ["a", "b", "c"]);
        prop_assert_eq!(back.len(), rows.len());
        for (x, y) in rows.iter().flatten().zip(back.iter().flatten()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        prop_assert_eq!(csv_bytes(&["a", "b", "c"], &back).unwrap(), bytes);
    }
}
