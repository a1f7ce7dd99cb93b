//! Random polyhedra and a brute-force point oracle that shares no code with the
//! library: points are found by scanning an interval box and evaluating every
//! constraint directly.

#![allow(dead_code)]

use rand::Rng;

pub const DIM_NAMES: [&str; 3] = ["i", "j", "k"];
pub const PARAM_NAMES: [&str; 2] = ["n", "m"];

/// `sum(dims[d] * x_d) + sum(params[p] * p) + constant (>= | =) 0`
#[derive(Debug, Clone)]
pub struct Row {
    pub dims: Vec<i64>,
    pub params: Vec<i64>,
    pub constant: i64,
    pub eq: bool,
}

impl Row {
    pub fn value(&self, x: &[i64], p: &[i64]) -> i64 {
        let a: i64 = self.dims.iter().zip(x).map(|(c, v)| c * v).sum();
        let b: i64 = self.params.iter().zip(p).map(|(c, v)| c * v).sum();
        a + b + self.constant
    }

    pub fn holds(&self, x: &[i64], p: &[i64]) -> bool {
        let v = self.value(x, p);
        if self.eq {
            v == 0
        } else {
            v >= 0
        }
    }

    fn render_terms(&self, names: &[&str], params: &[&str]) -> String {
        let mut parts = Vec::new();
        for (c, n) in self.dims.iter().zip(names).chain(self.params.iter().zip(params)) {
            if *c != 0 {
                parts.push(format!("{c}*{n}"));
            }
        }
        parts.push(self.constant.to_string());
        parts.join(" + ").replace("+ -", "- ")
    }

    pub fn render(&self, names: &[&str], params: &[&str]) -> String {
        let op = if self.eq { "=" } else { ">=" };
        format!("{} {op} 0", self.render_terms(names, params))
    }
}

#[derive(Debug, Clone)]
pub struct Case {
    pub dims: usize,
    pub param_values: Vec<i64>,
    pub rows: Vec<Row>,
    /// For each dim, an interval that contains every point of the set.
    pub bbox: Vec<(i64, i64)>,
}

impl Case {
    pub fn params(&self) -> Vec<&'static str> {
        PARAM_NAMES[..self.param_values.len()].to_vec()
    }

    pub fn text(&self) -> String {
        let names = &DIM_NAMES[..self.dims];
        let params = self.params();
        let body: Vec<String> = self.rows.iter().map(|r| r.render(names, &params)).collect();
        format!(
            "[{}] -> {{ S[{}] : {} }}",
            params.join(", "),
            names.join(", "),
            body.join(" and ")
        )
    }

    pub fn bindings(&self) -> Vec<(&'static str, i64)> {
        self.params().into_iter().zip(self.param_values.iter().copied()).collect()
    }

    pub fn box_volume(&self) -> i64 {
        self.bbox.iter().map(|(l, h)| (h - l + 1).max(0)).product()
    }

    /// Every point of the set in lexicographic order, by exhaustive scan.
    pub fn oracle(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        let mut x = vec![0; self.dims];
        self.scan(0, &mut x, &mut out);
        out
    }

    fn scan(&self, d: usize, x: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if d == self.dims {
            if self.rows.iter().all(|r| r.holds(x, &self.param_values)) {
                out.push(x.clone());
            }
            return;
        }
        let (lo, hi) = self.bbox[d];
        for v in lo..=hi {
            x[d] = v;
            self.scan(d + 1, x, out);
        }
    }
}

fn interval_of(row_dims: &[i64], row_params: &[i64], constant: i64, bbox: &[(i64, i64)], p: &[i64]) -> (i64, i64) {
    let mut lo = constant;
    let mut hi = constant;
    for (c, (l, h)) in row_dims.iter().zip(bbox) {
        let (a, b) = (c * l, c * h);
        lo += a.min(b);
        hi += a.max(b);
    }
    for (c, v) in row_params.iter().zip(p) {
        lo += c * v;
        hi += c * v;
    }
    (lo, hi)
}

/// A bounded set with at most three dimensions, coefficients in [-3, 3] and
/// parameter values in [1, 12]. Each dimension gets one lower and one upper
/// bound over outer dimensions and parameters, plus up to two arbitrary
/// constraints. `None` when the bounding box exceeds `max_box` points.
pub fn random_case(rng: &mut impl Rng, max_box: i64) -> Option<Case> {
    let dims = rng.gen_range(1..=3);
    let np = rng.gen_range(1..=2);
    let param_values: Vec<i64> = (0..np).map(|_| rng.gen_range(1..=12)).collect();
    let mut rows = Vec::new();
    let mut bbox: Vec<(i64, i64)> = Vec::new();
    for k in 0..dims {
        let bound = |sign: i64, rng: &mut dyn rand::RngCore| {
            let a = rng.gen_range(1..=3);
            let mut ds = vec![0; dims];
            for d in ds.iter_mut().take(k) {
                *d = if rng.gen_bool(0.5) { rng.gen_range(-3..=3) } else { 0 };
            }
            ds[k] = sign * a;
            let ps: Vec<i64> = (0..np).map(|_| if rng.gen_bool(0.5) { rng.gen_range(-3..=3) } else { 0 }).collect();
            let constant = rng.gen_range(-3..=3) + if sign < 0 { 4 } else { 0 };
            Row {
                dims: ds,
                params: ps,
                constant,
                eq: false,
            }
        };
        let lower = bound(1, rng);
        let upper = bound(-1, rng);
        // a*x + rest >= 0  =>  x >= ceil(-max(rest) / a) over the box
        let rest_range = |r: &Row| {
            let mut ds = r.dims.clone();
            ds[k] = 0;
            interval_of(&ds[..k], &r.params, r.constant, &bbox, &param_values)
        };
        let (_, lmax) = rest_range(&lower);
        let lo = (-lmax).div_euclid(lower.dims[k]) + i64::from((-lmax).rem_euclid(lower.dims[k]) != 0);
        let (_, umax) = rest_range(&upper);
        let hi = umax.div_euclid(-upper.dims[k]);
        rows.push(lower);
        rows.push(upper);
        bbox.push((lo, hi));
    }
    for _ in 0..rng.gen_range(0..=2) {
        let ds: Vec<i64> = (0..dims).map(|_| rng.gen_range(-3..=3)).collect();
        if ds.iter().all(|&c| c == 0) {
            continue;
        }
        let ps: Vec<i64> = (0..np).map(|_| rng.gen_range(-3..=3)).collect();
        rows.push(Row {
            dims: ds,
            params: ps,
            constant: rng.gen_range(-6..=12),
            eq: rng.gen_bool(0.15),
        });
    }
    let case = Case {
        dims,
        param_values,
        rows,
        bbox,
    };
    (case.box_volume() <= max_box).then_some(case)
}

/// Draws until a case with a small enough box turns up.
pub fn bounded_case(rng: &mut impl Rng, max_box: i64) -> Case {
    loop {
        if let Some(c) = random_case(rng, max_box) {
            return c;
        }
    }
}

/// A set with existentials, each defined by a unit-coefficient equality,
/// together with a brute-force oracle that searches the existential values.
#[derive(Debug, Clone)]
pub struct ExistsCase {
    pub text: String,
    pub dims: usize,
    pub bbox: Vec<(i64, i64)>,
    /// `r_e = sum(def[e][d] * x_d) + offset[e]`, constrained to `[lo, hi]`
    pub defs: Vec<(Vec<i64>, i64, i64, i64)>,
    /// Unit coefficient used on the existential in the printed equality.
    pub signs: Vec<i64>,
}

impl ExistsCase {
    pub fn oracle(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        let mut x = vec![0; self.dims];
        self.scan(0, &mut x, &mut out);
        out
    }

    fn scan(&self, d: usize, x: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if d == self.dims {
            // search every existential value in a wide window instead of solving
            let ok = self.defs.iter().all(|(coef, off, lo, hi)| {
                (-200..=200).any(|r| {
                    let v: i64 = coef.iter().zip(x.iter()).map(|(c, v)| c * v).sum::<i64>() + off;
                    r == v && *lo <= r && r <= *hi
                })
            });
            if ok {
                out.push(x.clone());
            }
            return;
        }
        for v in self.bbox[d].0..=self.bbox[d].1 {
            x[d] = v;
            self.scan(d + 1, x, out);
        }
    }
}

pub fn random_exists_case(rng: &mut impl Rng) -> ExistsCase {
    let dims = rng.gen_range(1..=3);
    let names = &DIM_NAMES[..dims];
    let bbox: Vec<(i64, i64)> = (0..dims)
        .map(|_| {
            let lo = rng.gen_range(-6..=2);
            (lo, lo + rng.gen_range(0..=8))
        })
        .collect();
    let mut parts: Vec<String> = names
        .iter()
        .zip(&bbox)
        .map(|(n, (l, h))| format!("{l} <= {n} <= {h}"))
        .collect();
    let n_ex = rng.gen_range(1..=2);
    let mut defs = Vec::new();
    let mut signs = Vec::new();
    let mut ex_names = Vec::new();
    for e in 0..n_ex {
        let r = format!("r{e}");
        let coef: Vec<i64> = (0..dims).map(|_| rng.gen_range(-3..=3)).collect();
        let off = rng.gen_range(-4..=4);
        let lo = rng.gen_range(-10..=4);
        let hi = lo + rng.gen_range(0..=12);
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        // sign * r = sign * (coef . x + off), written with r on the left
        let mut rhs = Vec::new();
        for (c, n) in coef.iter().zip(names) {
            if *c != 0 {
                rhs.push(format!("{}*{n}", sign * c));
            }
        }
        rhs.push((sign * off).to_string());
        let lhs = if sign == 1 { r.clone() } else { format!("-{r}") };
        parts.push(format!("{lhs} = {}", rhs.join(" + ")));
        parts.push(format!("{lo} <= {r} <= {hi}"));
        defs.push((coef, off, lo, hi));
        signs.push(sign);
        ex_names.push(r);
    }
    let text = format!(
        "{{ S[{}] : exists {} : {} }}",
        names.join(", "),
        ex_names.join(", "),
        parts.join(" and ")
    );
    ExistsCase {
        text,
        dims,
        bbox,
        defs,
        signs,
    }
}
