use std::collections::HashMap;
use std::sync::Mutex;

use crate::eisenstein::{eisenstein_expand, weight2_level_combo};
use crate::series::{Exponent, QSeries, Rational};
use crate::weierstrass::wpa_expand;

use super::expr::{Atom, FormExpr};
use super::{Catalog, CatalogError};

/// Expands catalog expressions, memoizing named entries and atoms.
///
/// A memo entry computed to a higher precision serves every lower one.
pub struct Evaluator<'c> {
    catalog: &'c Catalog,
    cache: Mutex<HashMap<String, QSeries>>,
}

impl<'c> Evaluator<'c> {
    pub fn new(catalog: &'c Catalog) -> Self {
        Evaluator { catalog, cache: Mutex::new(HashMap::new()) }
    }

    pub fn catalog(&self) -> &'c Catalog {
        self.catalog
    }

    /// Exact expansion of `e` below `q^prec`.
    pub fn evaluate(&self, e: &FormExpr, prec: i64) -> Result<QSeries, CatalogError> {
        let mut stack = Vec::new();
        Ok(self.eval(e, prec, &mut stack)?.truncate(prec))
    }

    fn cached(&self, key: &str, prec: i64) -> Option<QSeries> {
        let cache = self.cache.lock().expect("evaluator cache poisoned");
        cache
            .get(key)
            .filter(|s| s.prec() >= Exponent::int(prec))
            .map(|s| s.truncate(prec))
    }

    fn store(&self, key: String, s: &QSeries) {
        let mut cache = self.cache.lock().expect("evaluator cache poisoned");
        let better = cache.get(&key).is_none_or(|old| old.prec() < s.prec());
        if better {
            cache.insert(key, s.clone());
        }
    }

    fn eval(&self, e: &FormExpr, prec: i64, stack: &mut Vec<String>) -> Result<QSeries, CatalogError> {
        Ok(match e {
            FormExpr::Number(n) => QSeries::constant(n.value(), prec),
            FormExpr::Atom(a) => self.atom(a, prec, stack)?,
            FormExpr::Group(x) => self.eval(x, prec, stack)?,
            FormExpr::Neg(x) => self.eval(x, prec, stack)?.negate(),
            FormExpr::Add(a, b) => self.eval(a, prec, stack)?.add_series(&self.eval(b, prec, stack)?),
            FormExpr::Sub(a, b) => self.eval(a, prec, stack)?.sub_series(&self.eval(b, prec, stack)?),
            FormExpr::Mul(a, b) => {
                // a bare scalar scales instead of convolving
                match (a.as_ref(), b.as_ref()) {
                    (FormExpr::Number(n), other) | (other, FormExpr::Number(n)) => {
                        self.eval(other, prec, stack)?.scale(&n.value())
                    }
                    _ => self.eval(a, prec, stack)?.mul_series(&self.eval(b, prec, stack)?),
                }
            }
            FormExpr::Pow(x, n) => self.eval(x, prec, stack)?.pow(*n),
            FormExpr::At(x, d) => {
                let d64 = *d as i64;
                let inner = (prec + d64 - 1).div_euclid(d64).max(1);
                self.eval(x, inner, stack)?.substitute_q_power(*d)
            }
        })
    }

    fn atom(&self, a: &Atom, prec: i64, stack: &mut Vec<String>) -> Result<QSeries, CatalogError> {
        if let Atom::QSer { valuation, coeffs } = a {
            let coeffs: Vec<Rational> = coeffs.iter().map(|c| c.value()).collect();
            let s = QSeries::from_coeffs(crate::series::Grid::Integer, Exponent::int(*valuation), coeffs);
            return Ok(s.truncate(prec));
        }
        let key = a.to_string();
        if let Some(s) = self.cached(&key, prec) {
            return Ok(s);
        }
        let s = match a {
            Atom::Eta(q) => {
                if q.valuation() >= num_rational::Ratio::from(prec) {
                    QSeries::zero(prec)
                } else {
                    q.expand(prec)?
                }
            }
            Atom::E4(d) => self.lifted(4, *d, prec)?,
            Atom::E6(d) => self.lifted(6, *d, prec)?,
            Atom::Ew2(n) => weight2_level_combo(*n, prec)?,
            Atom::Wpa(p) => wpa_expand(*p, prec),
            Atom::Delta(n) => {
                let lc = self.catalog.level(*n)?;
                let q = lc.delta.clone();
                self.atom(&Atom::Eta(q), prec, stack)?
            }
            Atom::Ref(r) => {
                if stack.contains(&key) {
                    return Err(CatalogError::Cycle(key));
                }
                let entry = self.catalog.entry(r)?;
                stack.push(key.clone());
                let s = self.eval(&entry.expr, prec, stack);
                stack.pop();
                s?.truncate(prec)
            }
            Atom::QSer { .. } => unreachable!("handled above"),
        };
        self.store(key, &s);
        Ok(s)
    }

    fn lifted(&self, weight: u32, d: u32, prec: i64) -> Result<QSeries, CatalogError> {
        let d64 = d as i64;
        let inner = (prec + d64 - 1).div_euclid(d64).max(1);
        Ok(eisenstein_expand(weight, inner)?.substitute_q_power(d).truncate(prec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::parse_expr;
    use crate::series::rat;

    fn eval(t: &str, prec: i64) -> QSeries {
        Evaluator::new(Catalog::standard()).evaluate(&parse_expr(t).unwrap(), prec).unwrap()
    }

    #[test]
    fn catalog_forms() {
        assert_eq!(eval("F[8,2,1]", 8), QSeries::from_ints(0, &[0, 1, -8, 12, 64, -210, -96, 1016]));
        assert_eq!(eval("F[6,4,1]", 11), QSeries::from_ints(1, &[1, 0, -12, 0, 54, 0, -88, 0, -99, 0]));
        assert_eq!(eval("delta(1)", 5), QSeries::from_ints(1, &[1, -24, 252, -1472]));
        let f45 = eval("F[4,5,1]", 3);
        assert_eq!(f45, QSeries::from_ints(1, &[1, -4]));
    }

    #[test]
    fn constants_and_scalars() {
        assert_eq!(eval("1", 4), QSeries::one(4));
        assert_eq!(eval("3/2*E4(1)", 2), QSeries::from_coeffs(crate::series::Grid::Integer, Exponent::ZERO, vec![crate::series::ratio(3, 2), rat(360)]));
        assert_eq!(eval("E4(1)*2", 2), QSeries::from_ints(0, &[2, 480]));
    }

    #[test]
    fn substitution_precision() {
        let s = eval("delta(4)@2", 10);
        assert_eq!(s.prec(), Exponent::int(10));
        assert_eq!(s, QSeries::from_ints(2, &[1, 0, 0, 0, 4, 0, 0, 0]));
    }

    #[test]
    fn half_grid_intermediates_cancel() {
        let s = eval("E[4,5,1]", 12);
        assert_eq!(s.grid(), crate::series::Grid::Integer);
        assert!(s.is_unitary());
        assert_eq!(s.valuation().unwrap(), Exponent::int(1));
    }

    #[test]
    fn memo_serves_lower_precision() {
        let ev = Evaluator::new(Catalog::standard());
        let e = parse_expr("E[6,7,1]").unwrap();
        let hi = ev.evaluate(&e, 20).unwrap();
        let lo = ev.evaluate(&e, 9).unwrap();
        assert_eq!(lo, hi.truncate(9));
        assert_eq!(lo, QSeries::from_ints(1, &[1, 9, 48, 181, 546, 1392, 3067, 6081]));
    }

    #[test]
    fn cycles_are_reported() {
        let c = Catalog::parse("level 2\ndelta = eta(2:16,1:-8)\ngen 2 0 = E[2,2,1]\ngen 2 1 = E[2,2,0]\n").unwrap();
        let ev = Evaluator::new(&c);
        let r = ev.evaluate(&parse_expr("E[2,2,0]").unwrap(), 4);
        assert!(matches!(r, Err(CatalogError::Cycle(_))));
    }
}
