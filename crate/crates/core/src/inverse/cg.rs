use crate::error::{Error, Result};
use crate::signal::Signal;

pub const CG_TOL: f64 = 1e-10;

/// Conjugate gradients for a symmetric positive-definite operator; stops when
/// `‖r‖ ≤ tol·‖b‖`.
pub fn conjugate_gradient<A>(apply: A, b: &Signal, x0: Option<&Signal>, tol: f64, max_iter: usize) -> Result<Signal>
where
    A: Fn(&Signal) -> Result<Signal>,
{
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok(b.scale(0.0));
    }
    let mut x = match x0 {
        Some(x) => x.clone(),
        None => b.scale(0.0),
    };
    let mut r = b.sub(&apply(&x)?)?;
    let mut p = r.clone();
    let mut rr = r.dot(&r)?;
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * bnorm {
            return Ok(x);
        }
        let ap = apply(&p)?;
        let pap = p.dot(&ap)?;
        if !(pap > 0.0) {
            return Err(Error::invalid("operator", "not positive definite"));
        }
        let step = rr / pap;
        x = x.lincomb(1.0, &p, step)?;
        r = r.lincomb(1.0, &ap, -step)?;
        let rr_next = r.dot(&r)?;
        p = r.lincomb(1.0, &p, rr_next / rr)?;
        rr = rr_next;
    }
    if rr.sqrt() <= tol * bnorm {
        return Ok(x);
    }
    Err(Error::NotConverged {
        what: "conjugate gradient",
        iterations: max_iter,
        residual: rr.sqrt() / bnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // [[4,1],[1,3]] x = [1,2] → x = [1/11, 7/11]
        let a = |v: &Signal| {
            let s = v.as_slice();
            Ok(v.like(vec![4.0 * s[0] + s[1], s[0] + 3.0 * s[1]]))
        };
        let b = Signal::from_vec(vec![1.0, 2.0]).unwrap();
        let x = conjugate_gradient(a, &b, None, 1e-14, 10).unwrap();
        assert!((x.as_slice()[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x.as_slice()[1] - 7.0 / 11.0).abs() < 1e-14);
    }
}
