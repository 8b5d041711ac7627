"""Smoke test for the Python bindings: python python/smoke_test.py"""

import tracetopk as tt


def main():
    ds = tt.Dataset.generate(300, seed=5)
    assert len(ds) == 300
    assert ds.index.height == 4

    engine = tt.Engine(ds, hashes=32, seed=5)
    assert engine.entity_count == 300
    q = ds.names[7]
    hits = engine.query(q, 5)
    assert len(hits) == 5
    assert [d for _, d in hits] == [d for _, d in engine.brute_force(q, 5)]
    assert all(0.0 <= d <= 1.0 for _, d in hits)
    name, deg = hits[0]
    assert abs(engine.degree(q, name) - deg) < 1e-12

    _, (examined, visited, pe) = engine.query_with_stats(q, 5)
    assert examined >= 5 and visited >= 1 and 0.0 <= pe <= 1.0

    index = tt.SpIndex.from_csv("a,r\nb,r\nr,-\n")
    assert index.height == 2 and index.base_count == 2
    traces = '{"entity":"x","location":"a","start":0,"end":7200}\n{"entity":"y","location":"a","start":3600}\n'
    small = tt.Dataset.ingest(traces, index)
    assert small.names == ["x", "y"] and small.record_count == 2

    assert tt.kendall_tau([1, 2, 3], [1, 2, 3]) == 0.0
    assert tt.kendall_tau([1, 2, 3], [3, 2, 1]) == 1.0
    assert abs(tt.kendall_tau([1, 2, 3], [1, 3, 2]) - 1 / 3) < 1e-12
    assert tt.k_avg([1, 2], [1, 2]) == 0.0
    assert 0.0 <= tt.predict_pe(64, 24, 16, 10, 1, 0.1) <= 1.0

    try:
        engine.query("nobody", 3)
    except KeyError:
        pass
    else:
        raise AssertionError("unknown entity accepted")
    print("python smoke test passed")


if __name__ == "__main__":
    main()
