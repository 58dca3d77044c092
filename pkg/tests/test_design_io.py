import json

import numpy as np
import pytest

from fidest.design import DesignCertificate, EstimatorDesign, target_fingerprint
from fidest.oasis import solve_oasis
from fidest.povm import MeasurementFamily
from fidest.spectral import solve_spectral

from conftest import haar_projector


def test_json_round_trip_is_exact(tmp_path):
    target = haar_projector(2, 7)
    design, cert = solve_spectral(target, MeasurementFamily(2))
    path = tmp_path / "design.json"
    design.save(path)
    loaded = EstimatorDesign.load(path)
    assert loaded.settings == design.settings
    assert np.array_equal(loaded.q, design.q)
    assert np.array_equal(loaded.alpha, design.alpha)
    assert loaded.objective == design.objective
    assert loaded.target_hash == design.target_hash == target_fingerprint(target)
    assert np.array_equal(loaded.certificate.y, cert.y)
    assert (loaded.certificate.t, loaded.certificate.gamma, loaded.certificate.s) == (cert.t, cert.gamma, cert.s)


def test_document_layout():
    design = solve_oasis(haar_projector(1, 2), MeasurementFamily(1))
    doc = design.to_dict()
    assert set(doc) == {"n", "method", "target_hash", "objective", "q", "alpha"}
    assert set(doc["q"]) == {"X", "Y", "Z"}
    assert set(doc["alpha"]["X"]) == {"0", "1"}
    assert json.loads(json.dumps(doc)) == doc


def test_absent_entries_read_as_zero():
    doc = {"n": 1, "method": "manual", "q": {"Z": 1.0}, "alpha": {"Z": {"0": 1.0}}}
    design = EstimatorDesign.from_dict(doc)
    assert design.settings == ("Z",)
    assert design.alpha.tolist() == [[1.0, 0.0]]


def test_certificate_objective():
    cert = DesignCertificate(y=np.zeros((1, 2)), t=0.5, gamma=0.0, s=0.25)
    assert cert.objective == 0.25


@pytest.mark.parametrize(
    "doc",
    [
        {"n": 1, "q": {"Q": 1.0}},
        {"n": 1, "q": {"Z": 1.0}, "alpha": {"Z": {"2": 1.0}}},
        {"n": 1, "q": {}, "alpha": {}},
        {"n": 1, "method": "magic", "q": {"Z": 1.0}},
    ],
)
def test_malformed_documents_rejected(doc):
    with pytest.raises(ValueError):
        EstimatorDesign.from_dict(doc)


def test_fingerprint_accepts_vector_or_projector():
    psi = np.array([1, 1j]) / np.sqrt(2)
    assert target_fingerprint(psi) == target_fingerprint(np.outer(psi, psi.conj()))
    assert target_fingerprint(psi) != target_fingerprint(np.array([1, 0]))
