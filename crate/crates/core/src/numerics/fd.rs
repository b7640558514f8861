use std::collections::BTreeMap;

use super::{Grid, NumericsError};
use crate::expr::{Compiled, EvalError, Expr, JetVar, Name, Symbol};

/// Finite-difference stencils: central first derivatives, five-point pure
/// second derivatives and four-point mixed derivatives.
pub struct Stencil;

type Field<'a> = &'a dyn Fn(&[f64]) -> Result<f64, EvalError>;

impl Stencil {
    /// Derivative of `u` at `p`; `counts[i]` is the order along axis `i`.
    pub fn derivative(u: Field, p: &[f64], counts: &[usize], h: f64) -> Result<f64, NumericsError> {
        let shifted = |moves: &[(usize, f64)]| -> Result<f64, NumericsError> {
            let mut q = p.to_vec();
            for (i, d) in moves {
                q[*i] += d;
            }
            u(&q).map_err(|s| NumericsError::Eval { at: q.clone(), source: s })
        };
        let axes: Vec<(usize, usize)> = counts.iter().cloned().enumerate().filter(|(_, c)| *c > 0).collect();
        match axes.as_slice() {
            [] => shifted(&[]),
            [(i, 1)] => Ok((shifted(&[(*i, h)])? - shifted(&[(*i, -h)])?) / (2.0 * h)),
            [(i, 2)] => {
                let i = *i;
                let v = -shifted(&[(i, 2.0 * h)])? + 16.0 * shifted(&[(i, h)])? - 30.0 * shifted(&[])?
                    + 16.0 * shifted(&[(i, -h)])?
                    - shifted(&[(i, -2.0 * h)])?;
                Ok(v / (12.0 * h * h))
            }
            [(i, 1), (j, 1)] => {
                let (i, j) = (*i, *j);
                let v = shifted(&[(i, h), (j, h)])? - shifted(&[(i, h), (j, -h)])? - shifted(&[(i, -h), (j, h)])?
                    + shifted(&[(i, -h), (j, -h)])?;
                Ok(v / (4.0 * h * h))
            }
            _ => Err(NumericsError::Order(counts.to_vec())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub max: f64,
    pub mean: f64,
    pub nodes: usize,
    pub worst: Vec<f64>,
    pub h: f64,
}

/// Residual of `residual` (an expression in the grid axes and jets of the
/// dependent variables) with jets replaced by stencil values of the given
/// fields, over every admissible node.
pub fn fd_residual(residual: &Expr, fields: &BTreeMap<Name, Field>, grid: &Grid) -> Result<FdReport, NumericsError> {
    let axis_names: Vec<Name> = grid
        .axes
        .iter()
        .map(|a| match &a.symbol {
            Symbol::Indep(n) | Symbol::Param(n) => n.clone(),
            Symbol::Jet(j) => j.base.clone(),
        })
        .collect();
    let jets: Vec<JetVar> = residual.jets().into_iter().filter(|j| fields.contains_key(&j.base)).collect();
    let mut vars: Vec<Symbol> = grid.axes.iter().map(|a| a.symbol.clone()).collect();
    vars.extend(jets.iter().map(|j| Symbol::Jet(j.clone())));
    let prog = Compiled::new(residual, &vars, &grid.consts).map_err(|s| NumericsError::Eval { at: vec![], source: s })?;
    let nodes = grid.nodes();
    if nodes.is_empty() {
        return Err(NumericsError::EmptyGrid);
    }
    let mut rep = FdReport { max: 0.0, mean: 0.0, nodes: nodes.len(), worst: nodes[0].clone(), h: grid.h };
    let mut sum = 0.0;
    for p in &nodes {
        let mut args = p.clone();
        for j in &jets {
            let mut counts = vec![0usize; axis_names.len()];
            for x in &j.index {
                match axis_names.iter().position(|a| a == x) {
                    Some(i) => counts[i] += 1,
                    None => return Err(NumericsError::Order(counts)),
                }
            }
            args.push(Stencil::derivative(fields[&j.base], p, &counts, grid.h)?);
        }
        let r = prog.eval(&args).map_err(|s| NumericsError::Eval { at: p.clone(), source: s })?.abs();
        sum += r;
        if r > rep.max || r.is_nan() {
            rep.max = r;
            rep.worst = p.clone();
        }
    }
    rep.mean = sum / nodes.len() as f64;
    Ok(rep)
}

/// `max(h) / max(h/2)`; about 4 for second-order truncation error.
pub fn richardson_ratio(coarse: &FdReport, fine: &FdReport) -> f64 {
    coarse.max / fine.max
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{name, parse};
    use crate::numerics::Axis;

    fn grid(h: f64) -> Grid {
        Grid::new(vec![Axis::new(Symbol::indep("x1"), 1.0, 2.0, 11), Axis::new(Symbol::indep("x2"), 1.0, 2.0, 11)], h)
    }

    #[test]
    fn quadratic_stencils_are_exact() {
        let u = |p: &[f64]| Ok(3.0 * p[0] * p[0] - 2.0 * p[0] * p[1] + p[1] * p[1] + p[0] - 7.0);
        let fields: BTreeMap<Name, Field> = BTreeMap::from([(name("u"), &u as Field)]);
        let eq = parse("diff(u,x1,x1) + diff(u,x2,x2) + diff(u,x1,x2) - 6").unwrap();
        assert!(fd_residual(&eq, &fields, &grid(1e-2)).unwrap().max < 1e-10);
        let eq = parse("diff(u,x1) - 6*x1 + 2*x2 - 1").unwrap();
        assert!(fd_residual(&eq, &fields, &grid(1e-2)).unwrap().max < 1e-10);
    }

    #[test]
    fn logarithmic_solution_of_wave_equation() {
        let u = |p: &[f64]| Ok((p[0] * p[1] + p[0]).ln());
        let fields: BTreeMap<Name, Field> = BTreeMap::from([(name("u"), &u as Field)]);
        let eq = parse("diff(u,x1,x2)").unwrap();
        assert!(fd_residual(&eq, &fields, &grid(1e-2)).unwrap().max < 1e-9);
        let h = |p: &[f64]| Ok(p[0].exp());
        let fields: BTreeMap<Name, Field> = BTreeMap::from([(name("u"), &h as Field)]);
        assert_eq!(fd_residual(&parse("diff(u,x2)").unwrap(), &fields, &grid(1e-3)).unwrap().max, 0.0);
    }

    #[test]
    fn second_order_convergence() {
        let u = |p: &[f64]| Ok((p[0] + 0.3 * p[1]).sin());
        let fields: BTreeMap<Name, Field> = BTreeMap::from([(name("u"), &u as Field)]);
        let eq = parse("diff(u,x1) - cos(x1 + 0.3*x2)").unwrap();
        let a = fd_residual(&eq, &fields, &grid(1e-2)).unwrap();
        let b = fd_residual(&eq, &fields, &grid(5e-3)).unwrap();
        let r = richardson_ratio(&a, &b);
        assert!((r - 4.0).abs() < 0.1, "{r}");
    }
}
