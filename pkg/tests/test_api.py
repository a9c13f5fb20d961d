import mpmath
from fastapi.testclient import TestClient

from app.main import app

client = TestClient(app)


def harmonic_request(**overrides):
    payload = {"potential": "harmonic", "orders": [4], "emin": "0", "emax": "10", "digits": 40}
    payload.update(overrides)
    return payload


def test_solve_returns_roots_per_order():
    response = client.post("/api/v1/eigen/solve", json=harmonic_request())

    assert response.status_code == 200
    body = response.json()
    assert body["potential"] == "x^2"
    assert body["method"] == "coefficient-zero"
    roots = body["results"][0]["roots"]
    assert len(roots) == 3
    with mpmath.workdps(40):
        assert abs(mpmath.mpf(roots[1]) - 5) < mpmath.mpf("1e-25")


def test_track_reports_converged_traces():
    response = client.post("/api/v1/eigen/track", json=harmonic_request(orders=[10, 20]))

    assert response.status_code == 200
    traces = response.json()["traces"]
    assert len(traces) == 3
    assert all(trace["converged"] for trace in traces)


def test_solver_errors_map_to_error_payload():
    response = client.post("/api/v1/eigen/solve", json=harmonic_request(emax=None))

    assert response.status_code == 422
    assert response.json() == {
        "error_code": "INVALID_INPUT",
        "error_message": "--emin and --emax must be given together.",
    }


def test_odd_parity_with_singular_potential_is_a_derivation_error():
    response = client.post(
        "/api/v1/eigen/solve",
        json={"potential": "singular", "parity": "odd", "orders": [10], "emin": "0", "emax": "8", "digits": 40},
    )

    assert response.status_code == 422
    assert response.json()["error_code"] == "DERIVATION_FAILED"


def test_malformed_numbers_are_rejected_before_solving():
    response = client.post("/api/v1/eigen/solve", json=harmonic_request(emin="1.2.3"))

    assert response.status_code == 422
    assert "detail" in response.json()


def test_precision_floor_is_enforced():
    response = client.post("/api/v1/eigen/solve", json=harmonic_request(digits=20))

    assert response.status_code == 422


def test_unknown_table_is_not_found():
    response = client.get("/api/v1/eigen/tables/9")

    assert response.status_code == 404
