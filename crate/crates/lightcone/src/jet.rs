//! Second-order forward-mode evaluation of coordinate expressions.
//!
//! A [`Jet2`] carries a value together with its gradient and dense
//! Hessian with respect to the full variable list `(u_1, ..., u_s, t)`.
//! Propagation is exact (up to rounding) for every operation in the
//! expression grammar, so world-sheet derivatives never rely on finite
//! differencing. A central-difference oracle, [`finite_diff_oracle`], is
//! kept alongside for the test suite and the `verify` subcommand.

use crate::error::{Error, Result};
use crate::expr::{unparse, ExprNode};

/// Value, gradient and Hessian of a scalar at a point. `grad.len()` is the
/// number of variables; `hess` is symmetric with the same dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
}

impl Jet2 {
    pub fn constant(value: f64, nvars: usize) -> Jet2 {
        Jet2 {
            value,
            grad: vec![0.0; nvars],
            hess: vec![vec![0.0; nvars]; nvars],
        }
    }

    /// The seed jet of variable `i` at `value`.
    pub fn variable(i: usize, value: f64, nvars: usize) -> Jet2 {
        let mut j = Jet2::constant(value, nvars);
        j.grad[i] = 1.0;
        j
    }

    pub fn nvars(&self) -> usize {
        self.grad.len()
    }

    fn add(&self, o: &Jet2) -> Jet2 {
        self.zip(o, |a, b| a + b)
    }

    fn sub(&self, o: &Jet2) -> Jet2 {
        self.zip(o, |a, b| a - b)
    }

    fn zip(&self, o: &Jet2, f: impl Fn(f64, f64) -> f64) -> Jet2 {
        let n = self.nvars();
        Jet2 {
            value: f(self.value, o.value),
            grad: (0..n).map(|i| f(self.grad[i], o.grad[i])).collect(),
            hess: (0..n)
                .map(|i| (0..n).map(|j| f(self.hess[i][j], o.hess[i][j])).collect())
                .collect(),
        }
    }

    fn mul(&self, o: &Jet2) -> Jet2 {
        let n = self.nvars();
        let value = self.value * o.value;
        let grad: Vec<f64> = (0..n)
            .map(|i| self.grad[i] * o.value + self.value * o.grad[i])
            .collect();
        let hess = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        self.hess[i][j] * o.value
                            + self.grad[i] * o.grad[j]
                            + self.grad[j] * o.grad[i]
                            + self.value * o.hess[i][j]
                    })
                    .collect()
            })
            .collect();
        Jet2 { value, grad, hess }
    }

    fn neg(&self) -> Jet2 {
        Jet2 {
            value: -self.value,
            grad: self.grad.iter().map(|g| -g).collect(),
            hess: self
                .hess
                .iter()
                .map(|row| row.iter().map(|h| -h).collect())
                .collect(),
        }
    }

    /// Chain rule through a scalar function with value `f`, first
    /// derivative `d1` and second derivative `d2` at `self.value`.
    fn compose(&self, f: f64, d1: f64, d2: f64) -> Jet2 {
        let n = self.nvars();
        let grad: Vec<f64> = (0..n).map(|i| d1 * self.grad[i]).collect();
        let hess = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| d1 * self.hess[i][j] + d2 * self.grad[i] * self.grad[j])
                    .collect()
            })
            .collect();
        Jet2 {
            value: f,
            grad,
            hess,
        }
    }
}

fn domain_err(node: &ExprNode, vars: &[String], message: &str) -> Error {
    Error::Domain {
        expr: unparse(node, vars),
        message: message.into(),
    }
}

/// Evaluates `e` as a [`Jet2`] over all of `vars` at `point`.
///
/// `point.len()` must equal `vars.len()`. Domain failures (division by
/// zero, `log` of a non-positive value, `sqrt` of a non-positive value,
/// `0^k` with `k < 0`) report the offending subexpression. `sqrt` needs a
/// strictly positive argument here because its derivatives blow up at 0.
pub fn eval_jet2(e: &ExprNode, vars: &[String], point: &[f64]) -> Result<Jet2> {
    if point.len() != vars.len() {
        return Err(Error::DimensionMismatch {
            expected: vars.len(),
            got: point.len(),
        });
    }
    eval_jet_inner(e, vars, point)
}

fn eval_jet_inner(e: &ExprNode, vars: &[String], point: &[f64]) -> Result<Jet2> {
    let n = vars.len();
    Ok(match e {
        ExprNode::Const(c) => Jet2::constant(*c, n),
        ExprNode::Var(i) => Jet2::variable(*i, point[*i], n),
        ExprNode::Add(a, b) => {
            eval_jet_inner(a, vars, point)?.add(&eval_jet_inner(b, vars, point)?)
        }
        ExprNode::Sub(a, b) => {
            eval_jet_inner(a, vars, point)?.sub(&eval_jet_inner(b, vars, point)?)
        }
        ExprNode::Mul(a, b) => {
            eval_jet_inner(a, vars, point)?.mul(&eval_jet_inner(b, vars, point)?)
        }
        ExprNode::Div(a, b) => {
            let num = eval_jet_inner(a, vars, point)?;
            let den = eval_jet_inner(b, vars, point)?;
            if den.value == 0.0 {
                return Err(domain_err(e, vars, "division by zero"));
            }
            let v = den.value;
            // 1/x composed, then a product
            let inv = den.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
            num.mul(&inv)
        }
        ExprNode::Neg(a) => eval_jet_inner(a, vars, point)?.neg(),
        ExprNode::Pow(a, k) => {
            let base = eval_jet_inner(a, vars, point)?;
            let x = base.value;
            if x == 0.0 && *k < 0 {
                return Err(domain_err(e, vars, "zero base with negative exponent"));
            }
            let kf = *k as f64;
            let f = x.powi(*k);
            // derivatives of x^k; the x == 0 cases avoid 0 * inf
            let d1 = if *k == 0 {
                0.0
            } else {
                kf * x.powi(*k - 1)
            };
            let d2 = if *k == 0 || *k == 1 {
                0.0
            } else {
                kf * (kf - 1.0) * x.powi(*k - 2)
            };
            base.compose(f, d1, d2)
        }
        ExprNode::Sin(a) => {
            let g = eval_jet_inner(a, vars, point)?;
            let (s, c) = g.value.sin_cos();
            g.compose(s, c, -s)
        }
        ExprNode::Cos(a) => {
            let g = eval_jet_inner(a, vars, point)?;
            let (s, c) = g.value.sin_cos();
            g.compose(c, -s, -c)
        }
        ExprNode::Exp(a) => {
            let g = eval_jet_inner(a, vars, point)?;
            let f = g.value.exp();
            g.compose(f, f, f)
        }
        ExprNode::Log(a) => {
            let g = eval_jet_inner(a, vars, point)?;
            if g.value <= 0.0 {
                return Err(domain_err(e, vars, "log of a non-positive value"));
            }
            let x = g.value;
            g.compose(x.ln(), 1.0 / x, -1.0 / (x * x))
        }
        ExprNode::Sqrt(a) => {
            let g = eval_jet_inner(a, vars, point)?;
            if g.value <= 0.0 {
                return Err(domain_err(e, vars, "sqrt of a non-positive value"));
            }
            let r = g.value.sqrt();
            g.compose(r, 0.5 / r, -0.25 / (r * g.value))
        }
    })
}

/// Plain value evaluation with the same domain rules as [`eval_jet2`].
pub fn eval_value(e: &ExprNode, vars: &[String], point: &[f64]) -> Result<f64> {
    if point.len() != vars.len() {
        return Err(Error::DimensionMismatch {
            expected: vars.len(),
            got: point.len(),
        });
    }
    eval_value_inner(e, vars, point)
}

fn eval_value_inner(e: &ExprNode, vars: &[String], point: &[f64]) -> Result<f64> {
    Ok(match e {
        ExprNode::Const(c) => *c,
        ExprNode::Var(i) => point[*i],
        ExprNode::Add(a, b) => {
            eval_value_inner(a, vars, point)? + eval_value_inner(b, vars, point)?
        }
        ExprNode::Sub(a, b) => {
            eval_value_inner(a, vars, point)? - eval_value_inner(b, vars, point)?
        }
        ExprNode::Mul(a, b) => {
            eval_value_inner(a, vars, point)? * eval_value_inner(b, vars, point)?
        }
        ExprNode::Div(a, b) => {
            let d = eval_value_inner(b, vars, point)?;
            if d == 0.0 {
                return Err(domain_err(e, vars, "division by zero"));
            }
            eval_value_inner(a, vars, point)? / d
        }
        ExprNode::Neg(a) => -eval_value_inner(a, vars, point)?,
        ExprNode::Pow(a, k) => {
            let x = eval_value_inner(a, vars, point)?;
            if x == 0.0 && *k < 0 {
                return Err(domain_err(e, vars, "zero base with negative exponent"));
            }
            x.powi(*k)
        }
        ExprNode::Sin(a) => eval_value_inner(a, vars, point)?.sin(),
        ExprNode::Cos(a) => eval_value_inner(a, vars, point)?.cos(),
        ExprNode::Exp(a) => eval_value_inner(a, vars, point)?.exp(),
        ExprNode::Log(a) => {
            let x = eval_value_inner(a, vars, point)?;
            if x <= 0.0 {
                return Err(domain_err(e, vars, "log of a non-positive value"));
            }
            x.ln()
        }
        ExprNode::Sqrt(a) => {
            let x = eval_value_inner(a, vars, point)?;
            if x <= 0.0 {
                return Err(domain_err(e, vars, "sqrt of a non-positive value"));
            }
            x.sqrt()
        }
    })
}

/// Independent derivative oracle: central differences of [`eval_value`].
///
/// Gradient entries use `(f(x+h) - f(x-h)) / 2h`, diagonal Hessian entries
/// the three-point stencil `(f(x+h) - 2 f(x) + f(x-h)) / h^2`, off-diagonal
/// entries the four-point stencil over `4 h^2`. Truncation error is
/// `O(h^2)`; rounding error grows like `eps / h^2`, so steps around `1e-4`
/// balance the two for second derivatives.
pub fn finite_diff_oracle(
    e: &ExprNode,
    vars: &[String],
    point: &[f64],
    step: f64,
) -> Result<Jet2> {
    if point.len() != vars.len() {
        return Err(Error::DimensionMismatch {
            expected: vars.len(),
            got: point.len(),
        });
    }
    let n = vars.len();
    let at = |p: &[f64]| eval_value(e, vars, p);
    let value = at(point)?;
    let mut grad = vec![0.0; n];
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut up = point.to_vec();
        let mut dn = point.to_vec();
        up[i] += step;
        dn[i] -= step;
        let fu = at(&up)?;
        let fd = at(&dn)?;
        grad[i] = (fu - fd) / (2.0 * step);
        hess[i][i] = (fu - 2.0 * value + fd) / (step * step);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut pp = point.to_vec();
            let mut pm = point.to_vec();
            let mut mp = point.to_vec();
            let mut mm = point.to_vec();
            pp[i] += step;
            pp[j] += step;
            pm[i] += step;
            pm[j] -= step;
            mp[i] -= step;
            mp[j] += step;
            mm[i] -= step;
            mm[j] -= step;
            let v = (at(&pp)? - at(&pm)? - at(&mp)? + at(&mm)?) / (4.0 * step * step);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok(Jet2 { value, grad, hess })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn names() -> Vec<String> {
        vec!["u1".into(), "t".into()]
    }

    fn jet(text: &str, point: &[f64]) -> Jet2 {
        let vars = names();
        let e = parse_expr(text, &vars).unwrap();
        eval_jet2(&e, &vars, point).unwrap()
    }

    #[test]
    fn cosine_product_jet() {
        // f = 2 cos(u1) t at (0, 1): value 2, f_u1 = 0, f_t = 2,
        // f_u1u1 = -2, f_u1t = 0, f_tt = 0
        let j = jet("2*cos(u1)*t", &[0.0, 1.0]);
        assert_eq!(j.value, 2.0);
        assert_eq!(j.grad, vec![0.0, 2.0]);
        assert_eq!(j.hess[0][0], -2.0);
        assert_eq!(j.hess[0][1], 0.0);
        assert_eq!(j.hess[1][0], 0.0);
        assert_eq!(j.hess[1][1], 0.0);
    }

    #[test]
    fn cube_against_oracle() {
        let vars = names();
        let e = parse_expr("u1^3", &vars).unwrap();
        let j = eval_jet2(&e, &vars, &[1.0, 0.0]).unwrap();
        let o = finite_diff_oracle(&e, &vars, &[1.0, 0.0], 1e-4).unwrap();
        assert!((j.grad[0] - o.grad[0]).abs() < 1e-6);
        assert!((j.hess[0][0] - o.hess[0][0]).abs() < 1e-6);
        assert_eq!(j.grad[0], 3.0);
        assert_eq!(j.hess[0][0], 6.0);
    }

    #[test]
    fn quotient_and_sqrt_jets() {
        // f = 1 / sqrt(1 + u1^2): f' = -u1 (1+u1^2)^{-3/2}
        let j = jet("1/sqrt(1 + u1^2)", &[1.0, 0.0]);
        let expected = -(1.0f64) / (2.0f64).powf(1.5);
        assert!((j.grad[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn hessian_is_symmetric() {
        let j = jet("sin(u1*t) + exp(u1 - t)*t^2", &[0.7, -0.3]);
        assert_eq!(j.hess[0][1], j.hess[1][0]);
    }

    #[test]
    fn domain_errors_carry_subexpression() {
        let vars = names();
        let e = parse_expr("1/(u1 - t)", &vars).unwrap();
        let err = eval_jet2(&e, &vars, &[0.5, 0.5]).unwrap_err();
        match err {
            Error::Domain { expr, message } => {
                assert_eq!(expr, "1/(u1 - t)");
                assert!(message.contains("division"));
            }
            other => panic!("wrong error: {other}"),
        }
        let e = parse_expr("log(-u1)", &vars).unwrap();
        assert!(eval_jet2(&e, &vars, &[1.0, 0.0]).is_err());
        let e = parse_expr("sqrt(u1)", &vars).unwrap();
        assert!(eval_jet2(&e, &vars, &[0.0, 0.0]).is_err());
        let e = parse_expr("u1^-1", &vars).unwrap();
        assert!(eval_jet2(&e, &vars, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn negative_powers_differentiate() {
        // f = u1^-2, f' = -2 u1^-3, f'' = 6 u1^-4 at u1 = 2
        let j = jet("u1^-2", &[2.0, 0.0]);
        assert!((j.value - 0.25).abs() < 1e-15);
        assert!((j.grad[0] + 2.0 / 8.0).abs() < 1e-15);
        assert!((j.hess[0][0] - 6.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn value_eval_matches_jet_value() {
        let vars = names();
        let e = parse_expr("exp(sin(u1) - t^2)*(u1 + 2)", &vars).unwrap();
        let p = [0.4, 0.9];
        let v = eval_value(&e, &vars, &p).unwrap();
        let j = eval_jet2(&e, &vars, &p).unwrap();
        assert_eq!(v, j.value);
    }
}
