mod common;

use common::{manufactured_errors, rates};

#[test]
fn linear_elements_converge_at_second_order() {
    let e = manufactured_errors(1, &[4, 8, 16, 32]);
    let r = rates(&e);
    println!("k=1 errors {e:?} rates {r:.3?}");
    assert!(r.iter().all(|&q| q >= 1.7), "{r:?}");
}

#[test]
fn quadratic_elements_converge_at_third_order() {
    let e = manufactured_errors(2, &[4, 8, 16, 32]);
    let r = rates(&e);
    println!("k=2 errors {e:?} rates {r:.3?}");
    assert!(r.iter().all(|&q| q >= 2.7), "{r:?}");
}
