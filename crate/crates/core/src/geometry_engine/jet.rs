//! Order-2 truncated Taylor jets in several variables.
//!
//! A jet carries a value, its gradient and its Hessian with respect to the
//! chart coordinates, so metric components built from jets expose exact
//! first and second spatial derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: Vec<f64>,
    /// Row-major n×n Hessian.
    pub h: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, n: usize) -> Self {
        Jet { v, g: vec![0.0; n], h: vec![0.0; n * n] }
    }

    /// Coordinate function x_i evaluated at `v`.
    pub fn variable(v: f64, i: usize, n: usize) -> Self {
        let mut j = Jet::constant(v, n);
        j.g[i] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// Composition with a scalar function given f(v), f'(v), f''(v).
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        let n = self.dim();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] = f2 * self.g[i] * self.g[j] + f1 * self.h[i * n + j];
            }
        }
        Jet { v: f0, g: self.g.iter().map(|x| f1 * x).collect(), h }
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn sqrt(&self) -> Jet {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.v))
    }

    pub fn powi(&self, k: i32) -> Jet {
        let k_f = k as f64;
        let f0 = self.v.powi(k);
        let f1 = if k == 0 { 0.0 } else { k_f * self.v.powi(k - 1) };
        let f2 = if k == 0 || k == 1 { 0.0 } else { k_f * (k_f - 1.0) * self.v.powi(k - 2) };
        self.chain(f0, f1, f2)
    }

    pub fn recip(&self) -> Jet {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            v: self.v * k,
            g: self.g.iter().map(|x| x * k).collect(),
            h: self.h.iter().map(|x| x * k).collect(),
        }
    }

    pub fn add_scalar(&self, k: f64) -> Jet {
        let mut j = self.clone();
        j.v += k;
        j
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            g: self.g.iter().zip(&o.g).map(|(a, b)| a + b).collect(),
            h: self.h.iter().zip(&o.h).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        self + &(-o)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = self.dim();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                h[k] = self.h[k] * o.v + o.h[k] * self.v + self.g[i] * o.g[j] + self.g[j] * o.g[i];
            }
        }
        Jet {
            v: self.v * o.v,
            g: self.g.iter().zip(&o.g).map(|(a, b)| a * o.v + b * self.v).collect(),
            h,
        }
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, o: &Jet) -> Jet {
        self * &o.recip()
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet { (&self).$m(&o) }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet { (&self).$m(o) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul, Div div);
