mod common;

use pelcr::canon::canonical_dump;
use pelcr::net::Net;
use pelcr::oracle::{
    alpha_eq, beta_normal_form, check_net_validity, classify_semifull, execution_formula,
    ExLimits,
};
use pelcr::runtime::{run, RuntimeConfig, Stepper};
use pelcr::translate::{parse, translate_src, Term};

use common::*;

#[test]
fn formula_is_invariant_at_every_step() {
    for src in SMALL {
        let init = translate_src(src, &[]).unwrap();
        let expected = execution_formula(&init.net, &[], ExLimits::default()).unwrap();
        let mut st = Stepper::new(&init, opts(true, true, false));
        while st.step().unwrap() {
            let (net, flags) = st.snapshot();
            let ex = execution_formula(&net, &flags, ExLimits::default()).unwrap();
            assert_eq!(ex, expected, "{src} after {} steps", st.steps);
        }
    }
}

#[test]
fn formula_is_invariant_without_optimizations() {
    for src in SMALL {
        let init = translate_src(src, &[]).unwrap();
        let expected = execution_formula(&init.net, &[], ExLimits::default()).unwrap();
        let mut st = Stepper::new(&init, opts(false, false, false));
        while st.step().unwrap() {
            let (net, flags) = st.snapshot();
            let ex = execution_formula(&net, &flags, ExLimits::default()).unwrap();
            assert_eq!(ex, expected, "{src} after {} steps", st.steps);
        }
    }
}

#[test]
fn semifull_after_every_step() {
    for src in [TWO_I, DELTA_I, TWO_TWO] {
        let init = translate_src(src, &[]).unwrap();
        let mut st = Stepper::new(&init, opts(true, true, false));
        loop {
            let (net, flags) = st.snapshot();
            assert!(classify_semifull(&net, &flags), "{src} after {} steps", st.steps);
            if !st.step().unwrap() {
                break;
            }
        }
    }
}

#[test]
fn translations_are_valid_nets() {
    for &(src, fv) in SUITE {
        let net = translate_src(src, &free(fv)).unwrap().net;
        let report = check_net_validity(&net);
        assert!(report.is_valid(), "{src}: {report:?}");
    }
}

#[test]
fn stepper_matches_threaded_runs() {
    for &(src, fv) in SUITE {
        let init = translate_src(src, &free(fv)).unwrap();
        let mut st = Stepper::new(&init, opts(true, true, true));
        assert!(st.run(u64::MAX).unwrap());
        let seq = canonical_dump(&st.finish());
        let par = run(&init, &config(3, opts(true, true, true))).unwrap().net;
        assert_eq!(seq, canonical_dump(&par), "{src}");
    }
}

#[test]
fn final_nets_contain_no_dangling_edges() {
    for &(src, fv) in SUITE {
        let init = translate_src(src, &free(fv)).unwrap();
        let out = run(&init, &config(4, opts(true, true, true))).unwrap();
        assert!(pelcr::runtime::dangling_edges(&out.net).is_empty());
        for w in &out.workers {
            if w.worker != 0 {
                assert_eq!(w.probes, 0);
            }
        }
    }
}

#[test]
fn dump_round_trips_final_nets() {
    let init = translate_src(DD2, &[]).unwrap();
    let net = run(&init, &RuntimeConfig::default()).unwrap().net;
    let text = net.dump();
    assert_eq!(Net::parse_dump(&text).unwrap().dump(), text);
}

#[test]
fn reduction_does_work() {
    let init = translate_src(DD2, &[]).unwrap();
    let out = run(&init, &RuntimeConfig::default()).unwrap();
    assert!(out.stats().nodes_created as usize > init.net.node_count());
}

#[test]
fn single_wire_terminates_at_once() {
    let init = translate_src("x", &["x".into()]).unwrap();
    for n in [1, 4] {
        let out = run(&init, &config(n, opts(true, true, true))).unwrap();
        assert_eq!(out.stats().compositions, 0);
    }
}

#[test]
fn beta_oracle_on_the_suite() {
    let nf = |s: &str| beta_normal_form(&parse(s).unwrap(), 100_000).unwrap();
    assert!(alpha_eq(&nf(TWO_I), &parse(r"\x x").unwrap()));
    assert!(alpha_eq(&nf(II), &parse(r"\x x").unwrap()));
    assert!(alpha_eq(&nf(DELTA_I), &parse(r"\x x").unwrap()));
    assert!(alpha_eq(&nf(TWO_TWO), &Term::church(4)));
    assert!(alpha_eq(&nf("(3)(2)"), &Term::church(8)));
}
