use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::model::Interval;

/// Bounds on a coupling term `A_ij x_j` over a box.
#[derive(Clone, Debug, PartialEq)]
pub struct BigM {
    /// `max |row_r · x|` over the box, per row of the gain.
    pub rows: Vec<f64>,
    /// Largest row value; the lower constant is its negative.
    pub upper: f64,
}

impl BigM {
    pub fn lower(&self) -> f64 {
        -self.upper
    }
}

fn check_box(bx: &[Interval]) -> Result<()> {
    if bx.iter().all(Interval::is_bounded) {
        Ok(())
    } else {
        Err(invalid("big-M constants need a bounded box"))
    }
}

/// Range of `row · x` over a box, by picking the vertex matching each sign.
fn linear_range(row: impl Iterator<Item = f64>, bx: &[Interval]) -> (f64, f64) {
    row.zip(bx).fold((0.0, 0.0), |(lo, hi), (a, iv)| {
        let (p, q) = (a * iv.lo, a * iv.hi);
        (lo + p.min(q), hi + p.max(q))
    })
}

/// Big-M constants of a coupling gain over the source state box.
pub fn coupling_big_m(gain: &DMatrix<f64>, state_box: &[Interval]) -> Result<BigM> {
    check_box(state_box)?;
    let rows: Vec<f64> = gain
        .row_iter()
        .map(|r| {
            let (lo, hi) = linear_range(r.iter().copied(), state_box);
            lo.abs().max(hi.abs())
        })
        .collect();
    let upper = rows.iter().copied().fold(0.0, f64::max);
    Ok(BigM { rows, upper })
}

/// Row-wise `(min, max)` of `S x + R u − T` over the state and input boxes.
pub fn indicator_bounds(
    s: &DMatrix<f64>,
    r: &DMatrix<f64>,
    t: &DVector<f64>,
    state_box: &[Interval],
    input_box: &[Interval],
) -> Result<Vec<(f64, f64)>> {
    check_box(state_box)?;
    check_box(input_box)?;
    Ok((0..t.len())
        .map(|i| {
            let (xl, xh) = linear_range(s.row(i).iter().copied(), state_box);
            let (ul, uh) = linear_range(r.row(i).iter().copied(), input_box);
            (xl + ul - t[i], xh + uh - t[i])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scalar_examples() {
        let m = coupling_big_m(&DMatrix::from_element(1, 1, 0.5), &[Interval::symmetric(1.0)]).unwrap();
        assert_eq!((m.upper, m.lower()), (0.5, -0.5));
        let m = coupling_big_m(&DMatrix::from_element(1, 1, 0.0), &[Interval::symmetric(1.0)]).unwrap();
        assert_eq!(m.upper, 0.0);
        let m = coupling_big_m(&DMatrix::from_element(1, 1, 0.31), &[Interval::symmetric(0.9)]).unwrap();
        assert!((m.upper - 0.279).abs() < 1e-15);
        assert!(coupling_big_m(&DMatrix::from_element(1, 1, 1.0), &[Interval::UNBOUNDED]).is_err());
    }

    #[test]
    fn indicator_of_nonnegative_guard() {
        let b = indicator_bounds(
            &DMatrix::from_element(1, 1, -1.0),
            &DMatrix::zeros(1, 1),
            &DVector::zeros(1),
            &[Interval::symmetric(0.9)],
            &[Interval::symmetric(0.5)],
        )
        .unwrap();
        assert_eq!(b, vec![(-0.9, 0.9)]);
    }

    proptest! {
        #[test]
        fn big_m_dominates_every_vertex(gain in proptest::collection::vec(-2.0f64..2.0, 6), lo in proptest::collection::vec(-1.0f64..0.0, 3), width in proptest::collection::vec(0.0f64..2.0, 3)) {
            let g = DMatrix::from_row_slice(2, 3, &gain);
            let bx: Vec<Interval> = lo.iter().zip(&width).map(|(l, w)| Interval::new(*l, l + w)).collect();
            let m = coupling_big_m(&g, &bx).unwrap();
            let mut attained = [0.0f64; 2];
            for mask in 0..8 {
                let v = DVector::from_iterator(3, (0..3).map(|i| if mask >> i & 1 == 1 { bx[i].hi } else { bx[i].lo }));
                let y = &g * v;
                for r in 0..2 {
                    prop_assert!(y[r].abs() <= m.rows[r] + 1e-12);
                    attained[r] = attained[r].max(y[r].abs());
                }
            }
            for r in 0..2 {
                prop_assert!((attained[r] - m.rows[r]).abs() < 1e-12);
            }
        }
    }
}
