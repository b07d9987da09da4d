use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Shape, Signal};

/// A linear forward operator `H` with its adjoint.
#[derive(Clone, Debug, PartialEq)]
pub enum ForwardOperator {
    Identity {
        shape: Shape,
    },
    /// Keeps the listed indices, in order.
    Mask {
        shape: Shape,
        kept: Vec<usize>,
    },
    /// Circular convolution with a centered kernel of `taps_shape` entries.
    CircularConvolution {
        shape: Shape,
        taps: Vec<f64>,
        taps_shape: (usize, usize),
    },
    ExplicitMatrix {
        shape: Shape,
        matrix: DMatrix<f64>,
    },
}

impl ForwardOperator {
    pub fn identity(shape: Shape) -> Self {
        ForwardOperator::Identity { shape }
    }

    pub fn mask(shape: Shape, mut kept: Vec<usize>) -> Result<Self> {
        kept.sort_unstable();
        kept.dedup();
        if let Some(&i) = kept.iter().find(|&&i| i >= shape.len()) {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: shape.len(),
            });
        }
        Ok(ForwardOperator::Mask { shape, kept })
    }

    pub fn convolution(shape: Shape, taps: Vec<f64>, taps_shape: (usize, usize)) -> Result<Self> {
        if taps.len() != taps_shape.0 * taps_shape.1 || taps.is_empty() {
            return Err(Error::shape(taps_shape, taps.len()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("taps", "must be finite"));
        }
        let (rows, cols) = shape.grid();
        if taps_shape.0 > rows || taps_shape.1 > cols {
            return Err(Error::invalid("taps", "kernel larger than the signal"));
        }
        Ok(ForwardOperator::CircularConvolution {
            shape,
            taps,
            taps_shape,
        })
    }

    pub fn matrix(shape: Shape, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.ncols() != shape.len() {
            return Err(Error::shape(matrix.shape(), shape));
        }
        Ok(ForwardOperator::ExplicitMatrix { shape, matrix })
    }

    /// Shape of the unknown `x`.
    pub fn input_shape(&self) -> Shape {
        match self {
            ForwardOperator::Identity { shape }
            | ForwardOperator::Mask { shape, .. }
            | ForwardOperator::CircularConvolution { shape, .. }
            | ForwardOperator::ExplicitMatrix { shape, .. } => *shape,
        }
    }

    /// Shape of the measurement `y`.
    pub fn output_shape(&self) -> Shape {
        match self {
            ForwardOperator::Mask { kept, .. } => Shape::D1(kept.len()),
            ForwardOperator::ExplicitMatrix { matrix, .. } => Shape::D1(matrix.nrows()),
            other => other.input_shape(),
        }
    }

    fn circular(&self, x: &[f64], adjoint: bool) -> Vec<f64> {
        let ForwardOperator::CircularConvolution {
            shape,
            taps,
            taps_shape: (kr, kc),
        } = self
        else {
            unreachable!()
        };
        let (rows, cols) = shape.grid();
        let (cr, cc) = ((kr / 2) as isize, (kc / 2) as isize);
        let wrap = |v: isize, n: usize| v.rem_euclid(n as isize) as usize;
        let mut out = vec![0.0; x.len()];
        for i in 0..rows {
            for j in 0..cols {
                let mut acc = 0.0;
                for a in 0..*kr {
                    for b in 0..*kc {
                        let (da, db) = (a as isize - cr, b as isize - cc);
                        let (si, sj) = if adjoint {
                            (i as isize + da, j as isize + db)
                        } else {
                            (i as isize - da, j as isize - db)
                        };
                        acc += taps[a * kc + b] * x[wrap(si, rows) * cols + wrap(sj, cols)];
                    }
                }
                out[i * cols + j] = acc;
            }
        }
        out
    }

    pub fn apply(&self, x: &Signal) -> Result<Signal> {
        if x.len() != self.input_shape().len() {
            return Err(Error::shape(self.input_shape(), x.shape()));
        }
        let data = match self {
            ForwardOperator::Identity { .. } => return Ok(x.clone()),
            ForwardOperator::Mask { kept, .. } => kept.iter().map(|&i| x.as_slice()[i]).collect(),
            ForwardOperator::CircularConvolution { .. } => self.circular(x.as_slice(), false),
            ForwardOperator::ExplicitMatrix { matrix, .. } => {
                (matrix * DVector::from_column_slice(x.as_slice())).as_slice().to_vec()
            }
        };
        Ok(Signal::zeros(self.output_shape()).like(data))
    }

    pub fn adjoint(&self, z: &Signal) -> Result<Signal> {
        if z.len() != self.output_shape().len() {
            return Err(Error::shape(self.output_shape(), z.shape()));
        }
        let n = self.input_shape().len();
        let data = match self {
            ForwardOperator::Identity { .. } => z.as_slice().to_vec(),
            ForwardOperator::Mask { kept, .. } => {
                let mut out = vec![0.0; n];
                for (&i, &v) in kept.iter().zip(z.as_slice()) {
                    out[i] = v;
                }
                out
            }
            ForwardOperator::CircularConvolution { .. } => self.circular(z.as_slice(), true),
            ForwardOperator::ExplicitMatrix { matrix, .. } => {
                matrix.tr_mul(&DVector::from_column_slice(z.as_slice())).as_slice().to_vec()
            }
        };
        Ok(Signal::zeros(self.input_shape()).like(data))
    }

    /// `HᵀH x`.
    pub fn normal(&self, x: &Signal) -> Result<Signal> {
        self.adjoint(&self.apply(x)?)
    }

    /// Dense `m × n` matrix, built column by column.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.input_shape().len();
        let m = self.output_shape().len();
        let mut out = DMatrix::zeros(m, n);
        let mut e = Signal::zeros(self.input_shape());
        for j in 0..n {
            e.as_mut_slice()[j] = 1.0;
            let col = self.apply(&e)?;
            out.column_mut(j).copy_from_slice(col.as_slice());
            e.as_mut_slice()[j] = 0.0;
        }
        Ok(out)
    }
}

/// Config form of an operator; the input shape comes from context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Identity {},
    Mask {
        kept: Vec<usize>,
    },
    Convolution {
        taps: Vec<f64>,
        taps_shape: (usize, usize),
    },
    Matrix {
        rows: usize,
        cols: usize,
        /// Row-major entries.
        data: Vec<f64>,
    },
}

impl OperatorSpec {
    pub fn build(&self, shape: Shape) -> Result<ForwardOperator> {
        match self {
            OperatorSpec::Identity {} => Ok(ForwardOperator::identity(shape)),
            OperatorSpec::Mask { kept } => ForwardOperator::mask(shape, kept.clone()),
            OperatorSpec::Convolution { taps, taps_shape } => {
                ForwardOperator::convolution(shape, taps.clone(), *taps_shape)
            }
            OperatorSpec::Matrix { rows, cols, data } => {
                if data.len() != rows * cols {
                    return Err(Error::shape((rows, cols), data.len()));
                }
                ForwardOperator::matrix(shape, DMatrix::from_row_slice(*rows, *cols, data))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{GaussianStream, RngSeed};

    fn random(shape: Shape, rng: &mut GaussianStream) -> Signal {
        let mut d = vec![0.0; shape.len()];
        rng.fill_normal(&mut d, 1.0);
        Signal::zeros(shape).like(d)
    }

    fn adjoint_gap(h: &ForwardOperator, rng: &mut GaussianStream) -> f64 {
        let x = random(h.input_shape(), rng);
        let z = random(h.output_shape(), rng);
        (h.apply(&x).unwrap().dot(&z).unwrap() - x.dot(&h.adjoint(&z).unwrap()).unwrap()).abs()
    }

    #[test]
    fn adjoint_consistency() {
        let mut rng = GaussianStream::new(RngSeed(11), 0);
        let ops = vec![
            ForwardOperator::identity(Shape::D1(7)),
            ForwardOperator::mask(Shape::D2 { rows: 4, cols: 5 }, vec![0, 3, 7, 19]).unwrap(),
            ForwardOperator::convolution(Shape::D1(16), vec![0.1, 0.2, 0.4, 0.2, 0.1], (1, 5)).unwrap(),
            ForwardOperator::convolution(
                Shape::D2 { rows: 6, cols: 5 },
                vec![0.0, 1.0, 0.0, 2.0, -1.0, 0.5],
                (2, 3),
            )
            .unwrap(),
            ForwardOperator::matrix(Shape::D1(3), DMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]))
                .unwrap(),
        ];
        for h in &ops {
            for _ in 0..100 {
                assert!(adjoint_gap(h, &mut rng) < 1e-10, "{h:?}");
            }
        }
    }

    #[test]
    fn mask_zero_fills_and_convolution_shifts() {
        let h = ForwardOperator::mask(Shape::D1(4), vec![2, 0]).unwrap();
        let z = Signal::from_vec(vec![5.0, 7.0]).unwrap();
        assert_eq!(h.adjoint(&z).unwrap().as_slice(), &[5.0, 0.0, 7.0, 0.0]);
        // Delta one step right of centre shifts the signal right.
        let c = ForwardOperator::convolution(Shape::D1(4), vec![0.0, 0.0, 1.0], (1, 3)).unwrap();
        let x = Signal::from_vec(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(c.apply(&x).unwrap().as_slice(), &[4.0, 1.0, 2.0, 3.0]);
        assert_eq!(c.adjoint(&x).unwrap().as_slice(), &[2.0, 3.0, 4.0, 1.0]);
    }

    #[test]
    fn spec_forms() {
        let s: OperatorSpec = serde_json::from_str(r#"{"kind":"convolution","taps":[0.25,0.5,0.25],"taps_shape":[1,3]}"#).unwrap();
        assert!(s.build(Shape::D1(8)).is_ok());
        assert!(s.build(Shape::D1(2)).is_err());
        let m: OperatorSpec = serde_json::from_str(r#"{"kind":"matrix","rows":1,"cols":2,"data":[1,1]}"#).unwrap();
        assert_eq!(m.build(Shape::D1(2)).unwrap().output_shape(), Shape::D1(1));
    }
}
