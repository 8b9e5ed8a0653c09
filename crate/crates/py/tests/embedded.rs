use instab::instab;
use pyo3::prelude::*;

fn run(code: &std::ffi::CStr) {
    static INIT: std::sync::Once = std::sync::Once::new();
    INIT.call_once(|| {
        pyo3::append_to_inittab!(instab);
        Python::initialize();
    });
    Python::attach(|py| {
        if let Err(e) = py.run(code, None, None) {
            e.print(py);
            panic!("python raised {e}");
        }
    });
}

#[test]
fn fit_explain_select() {
    run(cr#"
import instab
data, prov = instab.synth_regression(n=200, informative=3, redundant=1, noise=4, noise_sd=1.0, seed=2)
train, valid, test = instab.split(data, 2)
tr, va = data.select_rows(train), data.select_rows(valid)
forest = instab.Forest.fit(tr, seed=2, n_trees=30)
assert forest.task == "regression" and forest.n_trees == 30
imp = instab.explain(forest, tr, va, "mda", n_repeat=4, seed=2)
rep = instab.stability_report(imp)
assert len(rep["average_ranks"]) == 8
sel = instab.select_features(imp)
assert sel["threshold"] == 1 / 8
m = instab.evaluate(data, train, test, sel["selected"], seed=2)
assert m["scores"]["task"] == "regression" and m["n_rows"] == len(test)
"#);
}

#[test]
fn errors_map_to_python_exceptions() {
    run(cr#"
import instab
for call, exc in [
    (lambda: instab.Dataset([[1.0, 2.0]], [2.0]), ValueError),
    (lambda: instab.Dataset([[1.0], [1.0, 2.0]], [0.0, 1.0]), ValueError),
    (lambda: instab.sharpe([0.1, 0.1]), ArithmeticError),
    (lambda: instab.load_trades("/no/such/trades.csv"), OSError),
    (lambda: instab.instability_index([[1, 2]], 3), ValueError),
]:
    try:
        call()
    except exc:
        pass
    else:
        raise AssertionError(f"expected {exc.__name__}")
"#);
}

#[test]
fn hand_built_importance() {
    run(cr#"
import instab
imp = instab.Importance([[3.0, 2.0, 1.0], [1.0, 2.0, 3.0]], ["a", "b", "c"])
assert imp.ranks() == [[1, 2, 3], [3, 2, 1]]
rep = instab.stability_report(imp)
assert rep["variances"] == [1.0, 0.0, 1.0]
"#);
}
