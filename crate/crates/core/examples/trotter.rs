//! The product formula `e^{t(A+B)} = lim (e^{tA/n} e^{tB/n})^n`: first-order error decay for
//! non-commuting matrices, exactness for commuting ones.
//!
//! `cargo run --release --example trotter`

use nalgebra::DMatrix;
use skdv::dynamics::trotter_compare;

fn main() -> skdv::Result<()> {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    let mut prev: Option<f64> = None;
    for n in [8, 16, 32, 64, 128, 256] {
        let e = trotter_compare(&a, &b, 1.0, n)?;
        match prev {
            Some(p) => println!("n = {n:>3}: error {e:.3e}, local rate {:.3}", (p / e).log2()),
            None => println!("n = {n:>3}: error {e:.3e}"),
        }
        prev = Some(e);
    }
    let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
    let d = &c * 0.5 + DMatrix::identity(2, 2);
    println!("commuting pair, n = 1: error {:.1e}", trotter_compare(&c, &d, 1.0, 1)?);
    Ok(())
}
