use dlstream_bench::{agrawal, sea};

#[test]
fn fixtures_are_seeded() {
    assert_eq!(sea(500, 1), sea(500, 1));
    assert_ne!(sea(500, 1), sea(500, 2));
    let a = agrawal(1000, 3);
    assert_eq!(a.len(), 1000);
    assert!(a.iter().any(|i| i.label) && a.iter().any(|i| !i.label));
}
