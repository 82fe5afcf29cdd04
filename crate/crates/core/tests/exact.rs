//! Threshold formulas evaluated over exact rationals.

use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive};
use shieldkey::shielded::horodecki_ppt_bound;
use shieldkey::thresholds_horodecki;

#[test]
fn thresholds_are_exact() {
    let t: (Ratio<i64>, Ratio<i64>) = thresholds_horodecki(1);
    assert_eq!(t, (Ratio::new(1, 3), Ratio::new(2, 5)));
    let t: (Ratio<i64>, Ratio<i64>) = thresholds_horodecki(2);
    assert_eq!(t, (Ratio::new(2, 7), Ratio::new(8, 25)));
    let t: (Ratio<i64>, Ratio<i64>) = thresholds_horodecki(3);
    assert_eq!(t, (Ratio::new(4, 15), Ratio::new(32, 113)));
}

#[test]
fn thresholds_approach_one_quarter_from_above() {
    let quarter = BigRational::new(1.into(), 4.into());
    let mut prev: Option<(BigRational, BigRational)> = None;
    for l in 1..40 {
        let (p1, p2): (BigRational, BigRational) = thresholds_horodecki(l);
        assert!(p1 > quarter && p2 > p1);
        if let Some((q1, q2)) = prev {
            assert!(p1 < q1 && p2 < q2);
        }
        prev = Some((p1, p2));
    }
    let (p1, _) = prev.unwrap();
    assert!((p1.to_f64().unwrap() - 0.25).abs() < 1e-10);
}

#[test]
fn ppt_bound_exact() {
    let b: Ratio<i64> = horodecki_ppt_bound(2, 1);
    assert_eq!(b, Ratio::new(1, 3));
    let b: Ratio<i64> = horodecki_ppt_bound(3, 1);
    assert_eq!(b, Ratio::new(1, 3));
    let b: Ratio<i64> = horodecki_ppt_bound(2, 2);
    assert_eq!(b, Ratio::new(1, 5));
    let b: Ratio<i64> = horodecki_ppt_bound(3, 2);
    assert_eq!(b, Ratio::new(4, 13));
    assert!(horodecki_ppt_bound::<Ratio<i64>>(5, 1) <= Ratio::one() / Ratio::from_integer(3));
}
