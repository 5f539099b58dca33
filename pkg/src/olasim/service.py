"""HTTP service exposing the analytics and simulators.

Request/response schemas double as the canonical JSON config format: the
command-line tool builds the same request models from config files and
flags, then either calls the handler functions in-process or posts them to
a running server.  Handlers are pure functions of their requests, so both
paths produce identical results.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, field_validator

from . import __version__
from .continuum import (
    PI_LN2,
    BroadcastDied,
    ContinuumParams,
    InfeasibleError,
    epsilon_min,
    fes,
    propagate,
)
from .discretesim import ChannelModel, TrialConfig, psb_sweep
from .units import (
    EXAMPLE_LINK_BUDGETS,
    RadioParams,
    decoding_ratio,
    decoding_ratio_2p4ghz,
    nearest_neighbor_distance,
)
from .varthresh import (
    ConstraintSpec,
    NoFeasibleSolutionError,
    OptimizationResult,
    OptimizerConfig,
    optimize,
)

__all__ = [
    "EpsilonValue",
    "ContinuumParamsModel",
    "RingsRequest",
    "RingsResponse",
    "MrttRequest",
    "MrttResponse",
    "FesRequest",
    "FesResponse",
    "OptimizeRequest",
    "OptimizeResponse",
    "ChannelModelModel",
    "TrialConfigModel",
    "PsbRequest",
    "PsbResponse",
    "RadioParamsModel",
    "UnitsRequest",
    "UnitsResponse",
    "run_rings",
    "run_mrtt",
    "run_fes",
    "run_optimize",
    "run_psb",
    "run_units",
    "app",
]


def _parse_epsilon_value(value) -> float:
    """Accept numbers or the strings 'inf'/'infinity' (JSON has no inf)."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        raise ValueError(f"epsilon string must be 'inf', got {value!r}")
    return float(value)


class ContinuumParamsModel(BaseModel):
    relay_power_density: float = Field(1.0, gt=0)
    decode_threshold: float = Field(1.0, gt=0)
    source_power: float = Field(3.0, gt=0)
    epsilon: float | str | list[float | str] = Field("inf", validate_default=True)

    @field_validator("epsilon")
    @classmethod
    def _epsilon_ok(cls, v):
        if isinstance(v, list):
            return [_parse_epsilon_value(x) for x in v]
        return _parse_epsilon_value(v)

    def to_params(self) -> ContinuumParams:
        eps = self.epsilon
        return ContinuumParams(
            relay_power_density=self.relay_power_density,
            decode_threshold=self.decode_threshold,
            source_power=self.source_power,
            epsilon=tuple(eps) if isinstance(eps, list) else eps,
        )


class RingLevel(BaseModel):
    level: int
    r_b: float
    r_d: float


class RingsRequest(BaseModel):
    params: ContinuumParamsModel = ContinuumParamsModel()
    levels: int = Field(50, ge=1)


class RingsResponse(BaseModel):
    rings: list[RingLevel]
    died_at: int | None = None
    unbounded: bool = False


class MrttRequest(BaseModel):
    dr_grid: list[float]


class MrttPoint(BaseModel):
    dr: float
    mrtt_db: float


class MrttResponse(BaseModel):
    points: list[MrttPoint]
    skipped: list[float]


class FesRequest(BaseModel):
    dr_grid: list[float]
    level_counts: list[int] = Field(default_factory=lambda: [100])
    epsilon: float | str = "min"  # 'min' tracks the smallest sustaining offset


class FesPoint(BaseModel):
    dr: float
    levels: int
    fes: float


class FesResponse(BaseModel):
    points: list[FesPoint]
    skipped: list[float]


class ConstraintSpecModel(BaseModel):
    kind: str
    levels: int = Field(ge=1)
    network_radius: float | None = None

    def to_spec(self) -> ConstraintSpec:
        return ConstraintSpec(
            kind=self.kind, levels=self.levels, network_radius=self.network_radius
        )


class OptimizerConfigModel(BaseModel):
    population_size: int = 64
    generations: int = 200
    crossover_rate: float = 0.8
    mutation_rate: float = 0.15
    mutation_scale: float | None = None
    elitism_count: int = 2
    penalty_weight: float | None = None
    rng_seed: int = 1

    def to_config(self) -> OptimizerConfig:
        return OptimizerConfig(**self.model_dump())


class OptimizeRequest(BaseModel):
    params: ContinuumParamsModel = ContinuumParamsModel()
    constraint: ConstraintSpecModel
    optimizer: OptimizerConfigModel = OptimizerConfigModel()


class OptimizeResponse(BaseModel):
    schedule: list[float]
    energy: float
    rings: list[RingLevel]
    fes_profile: list[tuple[float, float]]
    trace: list[float]


class ChannelModelModel(BaseModel):
    kind: str = "deterministic"
    diversity_order: int = 1

    def to_channel(self) -> ChannelModel:
        return ChannelModel(kind=self.kind, diversity_order=self.diversity_order)


class TrialConfigModel(BaseModel):
    source_power: float = 3.0
    decode_threshold: float = 1.0
    relay_power_density: float = 1.25
    epsilon: float | str | list[float | str] = Field(2.5, validate_default=True)
    density: float | None = None
    node_count: int | None = None
    area_radius: float = 17.0
    channel: ChannelModelModel = ChannelModelModel()
    max_levels: int = 200
    rng_seed: int = 0

    @field_validator("epsilon")
    @classmethod
    def _epsilon_ok(cls, v):
        if isinstance(v, list):
            return [_parse_epsilon_value(x) for x in v]
        return _parse_epsilon_value(v)

    def to_config(self) -> TrialConfig:
        eps = self.epsilon
        return TrialConfig(
            source_power=self.source_power,
            decode_threshold=self.decode_threshold,
            relay_power_density=self.relay_power_density,
            epsilon=tuple(eps) if isinstance(eps, list) else eps,
            density=self.density,
            node_count=self.node_count,
            area_radius=self.area_radius,
            channel=self.channel.to_channel(),
            max_levels=self.max_levels,
            rng_seed=self.rng_seed,
        )


class PsbRequest(BaseModel):
    base: TrialConfigModel = TrialConfigModel(density=10.0)
    rtt_grid_db: list[float]
    variant_kind: str = "density"
    variants: list[float] = Field(default_factory=lambda: [10.0])
    trials: int = Field(400, ge=1)
    seed: int = 0


class PsbRow(BaseModel):
    rtt_db: float
    variant: float
    psb: float
    halfwidth: float
    trials: int
    seed: int


class PsbResponse(BaseModel):
    rows: list[PsbRow]


class RadioParamsModel(BaseModel):
    label: str = ""
    tx_power_dBm: float
    rx_sensitivity_dBm: float
    antenna_gain_tx: float = 1.0
    antenna_gain_rx: float = 1.0
    wavelength_m: float = 0.125
    reference_distance_m: float = 1.0
    node_density_per_m2: float = Field(gt=0)

    def to_params(self) -> RadioParams:
        return RadioParams(
            tx_power_dBm=self.tx_power_dBm,
            rx_sensitivity_dBm=self.rx_sensitivity_dBm,
            antenna_gain_tx=self.antenna_gain_tx,
            antenna_gain_rx=self.antenna_gain_rx,
            wavelength_m=self.wavelength_m,
            reference_distance_m=self.reference_distance_m,
            node_density_per_m2=self.node_density_per_m2,
        )


class UnitsRequest(BaseModel):
    rows: list[RadioParamsModel] | None = None  # None: bundled examples
    link_constant: str = "rounded_2p4ghz"  # or 'exact'


class UnitsRow(BaseModel):
    example: str
    pt_dbm: float
    density_per_m2: float
    sens_dbm: float
    d_nn_m: float
    dr: float


class UnitsResponse(BaseModel):
    rows: list[UnitsRow]


def _rings_to_levels(seq) -> list[RingLevel]:
    return [
        RingLevel(level=k, r_b=r.inner_radius, r_d=r.outer_radius)
        for k, r in enumerate(seq.rings, start=1)
    ]


def run_rings(req: RingsRequest) -> RingsResponse:
    seq = propagate(req.params.to_params(), req.levels)
    return RingsResponse(
        rings=_rings_to_levels(seq), died_at=seq.died_at, unbounded=seq.unbounded
    )


def run_mrtt(req: MrttRequest) -> MrttResponse:
    points: list[MrttPoint] = []
    skipped: list[float] = []
    for dr in req.dr_grid:
        if not (0.0 < dr < PI_LN2):
            skipped.append(dr)
            continue
        em = epsilon_min(dr, 1.0)
        points.append(MrttPoint(dr=dr, mrtt_db=10.0 * math.log10((dr + em) / dr)))
    return MrttResponse(points=points, skipped=skipped)


def run_fes(req: FesRequest) -> FesResponse:
    points: list[FesPoint] = []
    skipped: list[float] = []
    for dr in req.dr_grid:
        if not (0.0 < dr < PI_LN2):
            skipped.append(dr)
            continue
        if req.epsilon == "min":
            eps = epsilon_min(dr, 1.0)
        else:
            eps = _parse_epsilon_value(req.epsilon)
        params = ContinuumParams(
            relay_power_density=1.0, decode_threshold=dr, source_power=1.0, epsilon=eps
        )
        for levels in req.level_counts:
            points.append(FesPoint(dr=dr, levels=levels, fes=fes(params, levels)))
    return FesResponse(points=points, skipped=skipped)


def _optimize_to_response(result: OptimizationResult) -> OptimizeResponse:
    return OptimizeResponse(
        schedule=list(result.best_schedule.values),
        energy=result.best_energy,
        rings=_rings_to_levels(result.rings),
        fes_profile=[(r, v) for r, v in result.fes_profile],
        trace=list(result.generation_trace),
    )


def run_optimize(req: OptimizeRequest, threads: int = 1) -> OptimizeResponse:
    result = optimize(
        req.params.to_params(),
        req.constraint.to_spec(),
        req.optimizer.to_config(),
        threads=threads,
    )
    return _optimize_to_response(result)


def run_psb(req: PsbRequest, threads: int = 1) -> PsbResponse:
    rows = psb_sweep(
        req.base.to_config(),
        req.rtt_grid_db,
        req.variants,
        req.trials,
        req.seed,
        variant_kind=req.variant_kind,
        threads=threads,
    )
    return PsbResponse(rows=[PsbRow(**row) for row in rows])


def run_units(req: UnitsRequest) -> UnitsResponse:
    if req.link_constant not in ("rounded_2p4ghz", "exact"):
        raise ValueError("link_constant must be 'rounded_2p4ghz' or 'exact'")
    rows: list[UnitsRow] = []
    if req.rows is None:
        samples = [(label, params) for label, params, _, _ in EXAMPLE_LINK_BUDGETS]
    else:
        samples = [
            (model.label or str(i + 1), model.to_params())
            for i, model in enumerate(req.rows)
        ]
    for label, params in samples:
        if req.link_constant == "rounded_2p4ghz":
            dr = decoding_ratio_2p4ghz(params)
        else:
            dr = decoding_ratio(params)
        rows.append(
            UnitsRow(
                example=label,
                pt_dbm=params.tx_power_dBm,
                density_per_m2=params.node_density_per_m2,
                sens_dbm=params.rx_sensitivity_dBm,
                d_nn_m=nearest_neighbor_distance(params.node_density_per_m2),
                dr=dr,
            )
        )
    return UnitsResponse(rows=rows)


app = FastAPI(title="olasim", version=__version__)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


def _wrap(handler, request, **kwargs):
    try:
        return handler(request, **kwargs)
    except (InfeasibleError, NoFeasibleSolutionError, BroadcastDied) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc))


@app.post("/rings", response_model=RingsResponse)
def rings_endpoint(req: RingsRequest) -> RingsResponse:
    return _wrap(run_rings, req)


@app.post("/mrtt", response_model=MrttResponse)
def mrtt_endpoint(req: MrttRequest) -> MrttResponse:
    return _wrap(run_mrtt, req)


@app.post("/fes", response_model=FesResponse)
def fes_endpoint(req: FesRequest) -> FesResponse:
    return _wrap(run_fes, req)


@app.post("/optimize", response_model=OptimizeResponse)
def optimize_endpoint(req: OptimizeRequest) -> OptimizeResponse:
    return _wrap(run_optimize, req)


@app.post("/psb", response_model=PsbResponse)
def psb_endpoint(req: PsbRequest) -> PsbResponse:
    return _wrap(run_psb, req)


@app.post("/units", response_model=UnitsResponse)
def units_endpoint(req: UnitsRequest) -> UnitsResponse:
    return _wrap(run_units, req)
