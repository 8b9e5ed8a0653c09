"""End-to-end check of the extension module: python python/smoke_test.py"""

import json
import math

import instab


def main():
    data, prov = instab.synth_classification(n=400, informative=4, redundant=2, noise=6, seed=3)
    assert (data.n_rows, data.n_features) == (400, 12)
    assert prov.count("informative") == 4 and prov.count("noise") == 6

    train, valid, test = instab.split(data, seed=3)
    assert len(train) + len(valid) + len(test) == 400
    tr, va = data.select_rows(train), data.select_rows(valid)

    forest = instab.Forest.fit(tr, seed=3, n_trees=50)
    proba = forest.predict_proba(va.features[:5])
    assert all(abs(sum(p) - 1.0) < 1e-12 for p in proba)
    assert instab.Forest.from_json(forest.to_json()).predict(va.features) == forest.predict(va.features)
    scores = forest.score(data.select_rows(test))
    assert scores["task"] == "classification" and 0.5 < scores["auc"] <= 1.0

    for alg in ("MDA", "LIME", "SHAP"):
        imp = instab.explain(forest, tr, va, alg, n_repeat=5, seed=1, subsample=20)
        assert imp.n_iterations == 5 and imp.algorithm == alg
        report = instab.stability_report(imp)
        assert len(report["index_by_k"]) == 12
        assert abs(sum(report["normalized_importance"]) - 1.0) < 1e-12
        assert abs(instab.instability_index(imp.ranks(), 3) - report["index_by_k"][2]) < 1e-12
        sel = instab.select_features(imp)
        assert sel["selected"] and all(s in data.feature_names for s in sel["selected"])
        metrics = instab.evaluate(data, train, test, sel["selected"], seed=3)
        print(f"{alg:4}  I(3) = {report['index_by_k'][2]:.3f}  selected {len(sel['selected']):2}  "
              f"auc {metrics['scores']['auc']:.3f}")

    # identical ranks every iteration: zero instability
    assert instab.instability_index([[1, 2, 3]] * 4, 3) == 0.0

    assert instab.cumulative_return([0.1, -0.1]) == (1.1 * 0.9) - 1.0
    assert math.isclose(instab.sharpe([0.01, 0.03]), 2.0)
    try:
        instab.sharpe([0.02, 0.02])
    except ArithmeticError:
        pass
    else:
        raise AssertionError("zero-variance Sharpe must raise")

    trades = instab.synth_trades(n=200, n_features=8, signal=2.0, seed=5)
    assert len(trades) == 200 and trades.timestamps[0].startswith("2000-01-01")
    ds = trades.to_dataset()
    model = instab.Forest.fit(ds.select_rows(list(range(150))), seed=5, n_trees=30)
    bt = trades.veto(model)
    assert bt["taken"] + bt["vetoed"] == 200
    print(json.dumps({"taken": bt["taken"], "sharpe": bt["sharpe"]}))

    try:
        instab.load_csv("/nonexistent.csv", "y")
    except OSError:
        pass
    else:
        raise AssertionError("missing file must raise OSError")
    print("smoke test passed")


if __name__ == "__main__":
    main()
