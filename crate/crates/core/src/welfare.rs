//! Bundle values, Nash welfare (as an n-th power), Pareto dominance and
//! efficiency ratios.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{AgentId, Allocation, Bundle, Instance};
use crate::rational::Rational;

pub fn bundle_value(inst: &Instance, agent: AgentId, bundle: &Bundle) -> Result<Rational> {
    inst.check_agent(agent)?;
    inst.check_bundle(bundle)?;
    Ok(inst.value_of(agent, bundle))
}

/// `NW(X)^n`, the product of every agent's value for their own bundle.
pub fn nw_pow_n(inst: &Instance, alloc: &Allocation) -> Rational {
    let mut product = Rational::one();
    for agent in 0..alloc.agents() {
        let v = alloc.value(inst, agent);
        if v.is_zero() {
            return Rational::zero();
        }
        product *= v;
    }
    product
}

/// Number of agents with positive value and the product of their values;
/// the order the oracles maximize.
pub fn positive_welfare(inst: &Instance, alloc: &Allocation) -> (usize, Rational) {
    let mut count = 0;
    let mut product = Rational::one();
    for agent in 0..alloc.agents() {
        let v = alloc.value(inst, agent);
        if !v.is_zero() {
            count += 1;
            product *= v;
        }
    }
    (count, product)
}

/// Does `a` Pareto-dominate `b`? Both must allocate the same item set.
pub fn pareto_dominates(inst: &Instance, a: &Allocation, b: &Allocation) -> Result<bool> {
    inst.check_allocation(a)?;
    inst.check_allocation(b)?;
    if a.allocated() != b.allocated() {
        return Err(Error::invalid(
            "Pareto comparison needs allocations of the same item set",
        ));
    }
    let mut strict = false;
    for agent in 0..inst.agents() {
        let (va, vb) = (a.value(inst, agent), b.value(inst, agent));
        if va < vb {
            return Ok(false);
        }
        strict |= va > vb;
    }
    Ok(strict)
}

/// `opt_pow_n / nw_pow_n(a)`, i.e. `alpha^n` for the smallest `alpha` at
/// which `a` is `alpha`-efficient.
pub fn alpha_pow_n(inst: &Instance, alloc: &Allocation, opt_pow_n: &Rational) -> Result<Rational> {
    inst.check_allocation(alloc)?;
    let nw = nw_pow_n(inst, alloc);
    if nw.is_zero() {
        return Err(Error::ZeroWelfare);
    }
    Ok(opt_pow_n / nw)
}

/// Is `ratio_pow_n` within the efficiency bound `alpha_pow_n`?
pub fn is_alpha_efficient(ratio_pow_n: &Rational, alpha_pow_n: &Rational) -> bool {
    ratio_pow_n <= alpha_pow_n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::inheritance;
    use crate::rational::{int, pow, ratio};

    #[test]
    fn bundle_values_on_inheritance_table() {
        let inst = inheritance();
        let car_painting = Bundle::new(vec![0, 2]).unwrap();
        assert_eq!(bundle_value(&inst, 0, &car_painting).unwrap(), int(14));
        let painting_necklace = Bundle::new(vec![2, 3]).unwrap();
        assert_eq!(bundle_value(&inst, 2, &painting_necklace).unwrap(), int(15));
        assert_eq!(bundle_value(&inst, 1, &Bundle::empty()).unwrap(), int(0));
        assert!(bundle_value(&inst, 3, &Bundle::empty()).is_err());
        assert!(bundle_value(&inst, 0, &Bundle::new(vec![4]).unwrap()).is_err());
    }

    #[test]
    fn nash_products() {
        let inst = inheritance();
        let mnw = Allocation::from_lists(&[vec![1], vec![0, 2], vec![3]], 4).unwrap();
        assert_eq!(nw_pow_n(&inst, &mnw), int(1539));
        let efx = Allocation::from_lists(&[vec![1], vec![0], vec![2, 3]], 4).unwrap();
        assert_eq!(nw_pow_n(&inst, &efx), int(1350));
        assert_eq!(nw_pow_n(&inst, &Allocation::empty(3, 4)), int(0));
    }

    #[test]
    fn pareto_dominance_cases() {
        let inst = inheritance();
        let efx = Allocation::from_lists(&[vec![1], vec![0], vec![2, 3]], 4).unwrap();
        assert!(!pareto_dominates(&inst, &efx, &efx).unwrap());
        // Carol drops from 15 to 9.
        let alt = Allocation::from_lists(&[vec![1, 2], vec![0], vec![3]], 4).unwrap();
        assert!(!pareto_dominates(&inst, &alt, &efx).unwrap());
        // Moving the painting from Alice to Bob: Bob 10 -> 19, Alice 13 -> 9.
        let mnw = Allocation::from_lists(&[vec![1], vec![0, 2], vec![3]], 4).unwrap();
        assert!(!pareto_dominates(&inst, &mnw, &alt).unwrap());
        // Bob gains the painting while it was donated before: the item sets differ.
        let without = Allocation::from_lists(&[vec![1], vec![0], vec![3]], 4).unwrap();
        assert!(pareto_dominates(&inst, &mnw, &without).is_err());
    }

    #[test]
    fn pareto_dominance_strict_gain() {
        let inst = Instance::from_integers(&[[1, 5], [5, 1]]).unwrap();
        let good = Allocation::from_lists(&[vec![1], vec![0]], 2).unwrap();
        let bad = Allocation::from_lists(&[vec![0], vec![1]], 2).unwrap();
        assert!(pareto_dominates(&inst, &good, &bad).unwrap());
        assert!(!pareto_dominates(&inst, &bad, &good).unwrap());
    }

    #[test]
    fn alpha_ratio_and_theorem_bound() {
        let inst = inheritance();
        let efx = Allocation::from_lists(&[vec![1], vec![0], vec![2, 3]], 4).unwrap();
        let r = alpha_pow_n(&inst, &efx, &int(1539)).unwrap();
        assert_eq!(r, ratio(1539, 1350));
        assert!(is_alpha_efficient(&r, &pow(&int(2), 2)));
        let mnw = Allocation::from_lists(&[vec![1], vec![0, 2], vec![3]], 4).unwrap();
        assert_eq!(alpha_pow_n(&inst, &mnw, &int(1539)).unwrap(), int(1));
        assert!(matches!(
            alpha_pow_n(&inst, &Allocation::empty(3, 4), &int(1)),
            Err(Error::ZeroWelfare)
        ));
    }
}
