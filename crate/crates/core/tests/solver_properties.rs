use globalbid::oracle::{grid_maximize, GridSpec};
use globalbid::solver_budget::{solve_budget, BudgetProblem};
use globalbid::solver_identical::solve_identical;
use globalbid::solver_nonidentical::solve_nonidentical;
use globalbid::solver_sequential::{solve_sequential, RoundSchedule};
use globalbid::utility::expected_utility;
use globalbid::{AuctionSet, CompetitiveBidModel, GlobalBid};
use proptest::prelude::*;

fn model(dynamic: bool, size: u32) -> CompetitiveBidModel {
    if dynamic {
        CompetitiveBidModel::dynamic_uniform(size as f64).unwrap()
    } else {
        CompetitiveBidModel::static_uniform(size).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identical_solver_beats_the_lattice(v in 0.05f64..1.0, m in 2usize..=3, size in 1u32..8, dynamic in any::<bool>()) {
        let g = model(dynamic, size);
        let r = solve_identical(m, v, &g).unwrap();
        let set = AuctionSet::identical(g, m).unwrap();
        let (_, oracle) = grid_maximize(v, &set, &GridSpec::new(2e-2, m, None).unwrap()).unwrap();
        prop_assert!(r.utility >= oracle - 1e-9, "solver {} oracle {}", r.utility, oracle);
        prop_assert!((expected_utility(&r.bids, v, &set).unwrap() - r.utility).abs() < 1e-12);
    }

    #[test]
    fn budget_solution_is_feasible_and_no_worse_than_simple_bids(v in 0.1f64..1.0, c in 0.1f64..2.0, m in 2usize..=4, size in 2u32..8) {
        let g = model(false, size);
        let s = solve_budget(&BudgetProblem::new(c, v, m, g.clone()).unwrap()).unwrap();
        prop_assert!(s.exposure <= c + 1e-9);
        let set = AuctionSet::identical(g, m).unwrap();
        let single = GlobalBid([vec![c.min(v)], vec![0.0; m - 1]].concat());
        prop_assert!(s.utility >= expected_utility(&single, v, &set).unwrap() - 1e-12);
        let spread = GlobalBid(vec![(c / m as f64).min(v); m]);
        prop_assert!(s.utility >= expected_utility(&spread, v, &set).unwrap() - 1e-12);
    }

    #[test]
    fn two_auction_nonidentical_matches_the_lattice(v in 0.05f64..1.0, n1 in 1u32..6, extra in 1u32..6) {
        let set = AuctionSet::new(vec![model(false, n1), model(false, n1 + extra)]).unwrap();
        let s = solve_nonidentical(v, &set, 1000).unwrap();
        let (_, oracle) = grid_maximize(v, &set, &GridSpec::new(1e-2, 2, None).unwrap()).unwrap();
        prop_assert!(s.result.utility >= oracle - 1e-9);
        prop_assert!(s.result.bids.0[0] >= s.result.bids.0[1]);
    }

    #[test]
    fn more_rounds_never_hurt(v in 0.05f64..1.0, first in 1usize..4, second in 1usize..4) {
        let g = model(false, 3);
        let one = solve_sequential(&RoundSchedule::identical_rounds(&[second], &g).unwrap(), v).unwrap();
        let two = solve_sequential(&RoundSchedule::identical_rounds(&[first, second], &g).unwrap(), v).unwrap();
        prop_assert!(two.utility >= one.utility - 1e-15);
        prop_assert!(two.utility <= v);
    }
}
