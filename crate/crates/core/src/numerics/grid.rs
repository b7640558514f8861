use crate::expr::{evaluate, Bindings, Expr, Symbol};

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub symbol: Symbol,
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl Axis {
    pub fn new(symbol: Symbol, lo: f64, hi: f64, nodes: usize) -> Self {
        Axis { symbol, lo, hi, nodes: nodes.max(1) }
    }

    pub fn point(&self, i: usize) -> f64 {
        if self.nodes == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.nodes - 1) as f64
        }
    }
}

/// Rectangular grid of evaluation nodes. `h` is the finite-difference step
/// used around each node; node spacing is set by the axes. Nodes where an
/// exclusion expression has magnitude below `margin` (default `h`) are
/// dropped.
#[derive(Clone, Debug)]
pub struct Grid {
    pub axes: Vec<Axis>,
    pub h: f64,
    pub exclusions: Vec<Expr>,
    pub margin: f64,
    pub consts: Bindings,
}

impl Grid {
    pub fn new(axes: Vec<Axis>, h: f64) -> Self {
        assert!(h > 0.0, "stencil step must be positive");
        Grid { axes, h, exclusions: Vec::new(), margin: h, consts: Bindings::new() }
    }

    pub fn exclude(mut self, e: Expr) -> Self {
        self.exclusions.push(e);
        self
    }

    pub fn with_consts(mut self, b: Bindings) -> Self {
        self.consts = b;
        self
    }

    pub fn with_step(&self, h: f64) -> Self {
        let mut g = self.clone();
        g.h = h;
        g.margin = self.margin.max(h);
        g
    }

    pub fn admissible(&self, point: &[f64]) -> bool {
        let mut b = self.consts.clone();
        for (a, x) in self.axes.iter().zip(point) {
            b.set(a.symbol.clone(), *x);
        }
        self.exclusions.iter().all(|e| matches!(evaluate(e, &b), Ok(v) if v.abs() >= self.margin))
    }

    /// Admissible nodes in row-major order (last axis fastest).
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![]];
        for a in &self.axes {
            let mut next = Vec::with_capacity(out.len() * a.nodes);
            for p in &out {
                for i in 0..a.nodes {
                    let mut q = p.clone();
                    q.push(a.point(i));
                    next.push(q);
                }
            }
            out = next;
        }
        out.into_iter().filter(|p| self.admissible(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn row_major_with_exclusion() {
        let g = Grid::new(vec![Axis::new(Symbol::indep("t"), 0.0, 1.0, 3), Axis::new(Symbol::indep("x"), 0.0, 1.0, 3)], 0.1);
        let n = g.nodes();
        assert_eq!(n.len(), 9);
        assert_eq!(n[1], vec![0.0, 0.5]);
        let g = g.exclude(parse("x - 0.5").unwrap());
        assert_eq!(g.nodes().len(), 6);
    }
}
