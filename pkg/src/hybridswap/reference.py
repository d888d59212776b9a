"""Published benchmark values of the tabletop experiment and model comparison.

The experiment's quoted numbers fall in two classes. The initial-state
entanglement follows from the measured state composition alone and is
compared directly. Everything measured after the swapping depends on an
optical efficiency budget that was never published, so those quantities are
only reproduced under a documented two-parameter loss fit per operating
point (output-path transmission `post_loss` and Bell-measurement homodyne
efficiency `bsm_efficiency`) and every such comparison is flagged `fitted`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.optimize import brentq, minimize

from .channel import ChannelSpec, apply_channel
from .negativity import log_negativity
from .postselect import summarize
from .states import SplitPhotonSpec, StateImpurity, split_photon

# measured composition of the R = 0.5 initial state
MEASURED_IMPURITY = StateImpurity(0.806, 0.183, 0.011)


@dataclass(frozen=True)
class ReferenceValue:
    name: str
    value: float
    uncertainty: float
    requires_fit: bool
    tolerance: float | None = None  # comparison band; defaults to the printed uncertainty

    @property
    def band(self) -> float:
        return self.uncertainty if self.tolerance is None else self.tolerance


@dataclass(frozen=True)
class OperatingPoint:
    """One experimental configuration: input reflectivity plus channel settings."""

    label: str
    reflectivity: float
    r: float
    g: float
    targets: tuple[ReferenceValue, ...]


# R = 0.50 dataset: initial-state entanglement, then the two swap settings
R050_INITIAL = ReferenceValue("E_AB", 0.71, 0.01, requires_fit=False, tolerance=0.02)
R050_POINTS = (
    OperatingPoint(
        "R0.50_r0.71_g0.63", 0.50, 0.71, 0.63,
        (
            ReferenceValue("P", 0.125, 0.002, True),
            ReferenceValue("S", 2.08, 0.05, True),
            ReferenceValue("F", 0.86, 0.01, True),
            ReferenceValue("E_ps", 0.67, 0.02, True),
        ),
    ),
    OperatingPoint(
        "R0.50_r1.01_g0.79", 0.50, 1.01, 0.79,
        (
            ReferenceValue("P", 0.160, 0.003, True),
            ReferenceValue("S", 2.21, 0.05, True),
            ReferenceValue("F", 0.89, 0.01, True),
            ReferenceValue("E_ps", 0.75, 0.02, True),
            ReferenceValue("E_AD", 0.28, 0.01, True),
        ),
    ),
)

# R = 0.67 dataset (supplementary runs); the initial-state composition was
# not quoted, so the ideal weight is itself fitted to the quoted E_AB
R067_INITIAL = ReferenceValue("E_AB", 0.64, 0.01, requires_fit=True)
R067_POINTS = (
    OperatingPoint(
        "R0.67_r0.71_g0.63", 0.67, 0.71, 0.63,
        (
            ReferenceValue("P", 0.103, 0.002, True),
            ReferenceValue("S", 2.11, 0.08, True),
            ReferenceValue("F", 0.87, 0.01, True),
            ReferenceValue("E_ps", 0.70, 0.04, True),
        ),
    ),
    OperatingPoint(
        "R0.67_r1.01_g0.79", 0.67, 1.01, 0.79,
        (
            ReferenceValue("P", 0.134, 0.003, True),
            ReferenceValue("S", 2.26, 0.04, True),
            ReferenceValue("F", 0.90, 0.01, True),
            ReferenceValue("E_ps", 0.77, 0.02, True),
        ),
    ),
)

DATASETS = {"R0.50": (R050_INITIAL, R050_POINTS), "R0.67": (R067_INITIAL, R067_POINTS)}


def impurity_for_reflectivity(reflectivity: float) -> tuple[StateImpurity, bool]:
    """Initial-state composition for a dataset.

    R = 0.5 uses the measured weights directly. For other reflectivities the
    composition was not published; the ideal weight is fitted so the model
    reproduces the quoted initial-state entanglement (vacuum/multiphoton
    ratio kept fixed), and the result is flagged fitted.
    """
    if abs(reflectivity - 0.5) < 1e-12:
        return MEASURED_IMPURITY, False
    target = R067_INITIAL.value
    ratio_v = MEASURED_IMPURITY.weight_vacuum / (1.0 - MEASURED_IMPURITY.weight_ideal)
    ratio_m = MEASURED_IMPURITY.weight_multiphoton / (1.0 - MEASURED_IMPURITY.weight_ideal)

    def build(w_ideal: float) -> StateImpurity:
        rest = 1.0 - w_ideal
        return StateImpurity(w_ideal, rest * ratio_v, rest * ratio_m)

    def objective(w_ideal: float) -> float:
        state = split_photon(SplitPhotonSpec(reflectivity, build(w_ideal)), cutoff=1)
        return log_negativity(state, [0]).log_negativity - target

    w_fit = brentq(objective, 0.4, 0.999, xtol=1e-12)
    return build(w_fit), True


def model_quantities(reflectivity: float, impurity: StateImpurity, r: float, g: float,
                     post_loss: float, bsm_efficiency: float, cutoff: int = 5) -> dict[str, float]:
    """Every quoted quantity predicted by the model at one operating point."""
    initial = split_photon(SplitPhotonSpec(reflectivity, impurity), cutoff=cutoff)
    spec = ChannelSpec(r, g, post_loss=post_loss, bsm_efficiency=bsm_efficiency)
    out = apply_channel(initial, 1, spec, trace_tol=1e-6)
    summary = summarize(out)
    return {
        "P": summary.success_probability,
        "S": summary.chsh_s,
        "F": summary.average_fidelity,
        "E_ps": summary.log_negativity_ps,
        "E_AD": log_negativity(out, [0]).log_negativity,
        "E_AB": log_negativity(initial, [0]).log_negativity,
    }


@dataclass
class LossFit:
    post_loss: float
    bsm_efficiency: float
    chi_squared: float
    quantities: dict[str, float] = field(default_factory=dict)


def fit_losses(point: OperatingPoint, impurity: StateImpurity, cutoff: int = 5) -> LossFit:
    """Least-squares (post_loss, bsm_efficiency) fit to one operating point,
    residuals weighted by the printed uncertainties."""

    def chi2(params) -> float:
        post, bsm = params
        if not (0.0 < post <= 1.0 and 0.0 < bsm <= 1.0):
            return 1e12
        m = model_quantities(point.reflectivity, impurity, point.r, point.g, post, bsm,
                             cutoff=cutoff)
        return sum(((m[t.name] - t.value) / t.uncertainty) ** 2 for t in point.targets)

    best = minimize(chi2, x0=[0.9, 0.9], method="Nelder-Mead",
                    options={"xatol": 1e-6, "fatol": 1e-8, "maxiter": 400})
    post, bsm = float(best.x[0]), float(best.x[1])
    quantities = model_quantities(point.reflectivity, impurity, point.r, point.g, post, bsm,
                                  cutoff=cutoff)
    return LossFit(post, bsm, float(best.fun), quantities)


@dataclass(frozen=True)
class ComparisonRow:
    quantity: str
    operating_point: str
    reference: float
    uncertainty: float
    model: float | None
    status: str  # "pass" | "fail" | "not_directly_comparable"
    fitted: bool
    note: str = ""

    def to_json_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "operating_point": self.operating_point,
            "reference": self.reference,
            "uncertainty": self.uncertainty,
            "model": self.model,
            "status": self.status,
            "fitted": self.fitted,
            "note": self.note,
        }


def compare_to_reference(dataset: str = "R0.50", *, fit: bool = True,
                         cutoff: int = 5) -> dict:
    """Compare model predictions against the published values of one dataset.

    With `fit=False` the ideal channel is used and every fit-requiring row is
    reported as not directly comparable; with `fit=True` the documented
    per-operating-point two-parameter loss fit is performed and those rows
    are marked fitted.
    """
    if dataset not in DATASETS:
        raise ValueError(f"unknown dataset {dataset!r}; choose from {sorted(DATASETS)}")
    initial_ref, points = DATASETS[dataset]
    reflectivity = points[0].reflectivity
    impurity, impurity_fitted = impurity_for_reflectivity(reflectivity)

    rows: list[ComparisonRow] = []
    initial = split_photon(SplitPhotonSpec(reflectivity, impurity), cutoff=1)
    e_ab = log_negativity(initial, [0]).log_negativity
    rows.append(
        ComparisonRow(
            quantity="E_AB",
            operating_point=f"R{reflectivity:.2f}_initial",
            reference=initial_ref.value,
            uncertainty=initial_ref.uncertainty,
            model=e_ab,
            status="pass" if abs(e_ab - initial_ref.value) <= initial_ref.band else "fail",
            fitted=impurity_fitted,
            note="composition fitted to the quoted value" if impurity_fitted
            else "predicted from the measured composition",
        )
    )

    fits: dict[str, LossFit] = {}
    for point in points:
        if fit:
            loss_fit = fit_losses(point, impurity, cutoff=cutoff)
            fits[point.label] = loss_fit
            for target in point.targets:
                model = loss_fit.quantities[target.name]
                ok = abs(model - target.value) <= target.band
                rows.append(
                    ComparisonRow(
                        quantity=target.name,
                        operating_point=point.label,
                        reference=target.value,
                        uncertainty=target.uncertainty,
                        model=model,
                        status="pass" if ok else "fail",
                        fitted=True,
                        note="two-parameter loss fit (post_loss, bsm_efficiency)",
                    )
                )
        else:
            ideal = model_quantities(point.reflectivity, impurity, point.r, point.g, 1.0, 1.0,
                                     cutoff=cutoff)
            for target in point.targets:
                rows.append(
                    ComparisonRow(
                        quantity=target.name,
                        operating_point=point.label,
                        reference=target.value,
                        uncertainty=target.uncertainty,
                        model=ideal[target.name],
                        status="not_directly_comparable",
                        fitted=False,
                        note="imperfection fit required; ideal-channel value shown",
                    )
                )

    report = {
        "dataset": dataset,
        "impurity": {
            "weight_ideal": impurity.weight_ideal,
            "weight_vacuum": impurity.weight_vacuum,
            "weight_multiphoton": impurity.weight_multiphoton,
            "fitted": impurity_fitted,
        },
        "fits": {
            label: {
                "post_loss": f.post_loss,
                "bsm_efficiency": f.bsm_efficiency,
                "chi_squared": f.chi_squared,
            }
            for label, f in fits.items()
        },
        "rows": [row.to_json_dict() for row in rows],
    }
    return report
