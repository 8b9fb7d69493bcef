"""Pydantic schemas for riesz-tomo inputs, scenarios and reports."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class RegionSpec(BaseModel):
    """Geometric region in domain units ([-1, 1]^d).

    ``disc_segment`` doubles as the boundary arc of the circle of radius
    ``radius`` and, when rasterized, as the circular segment cut off by the
    chord joining the arc endpoints.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["ball", "annulus", "disc_segment"] = Field(..., description="Region type")
    center: tuple[float, ...] = Field((0.0, 0.0), description="Ball center (missing axes are 0)")
    radius: float | None = Field(None, gt=0, description="Ball radius, or circle radius of a disc_segment")
    r_inner: float | None = Field(None, gt=0, description="Annulus inner radius")
    r_outer: float | None = Field(None, gt=0, description="Annulus outer radius")
    arc_center_angle: float = Field(0.0, description="Angle of the arc midpoint (radians)")
    arc_half_width: float | None = Field(None, gt=0, le=math.pi, description="Arc half-width (radians)")

    @model_validator(mode="after")
    def _check_kind_fields(self) -> "RegionSpec":
        if self.kind == "ball" and self.radius is None:
            raise ValueError("ball requires radius")
        if self.kind == "annulus":
            if self.r_inner is None or self.r_outer is None:
                raise ValueError("annulus requires r_inner and r_outer")
            if not self.r_inner < self.r_outer:
                raise ValueError(f"annulus needs r_inner < r_outer, got {self.r_inner} >= {self.r_outer}")
        if self.kind == "disc_segment" and self.arc_half_width is None:
            raise ValueError("disc_segment requires arc_half_width")
        return self

    @classmethod
    def ball(cls, radius: float, center: tuple[float, ...] = (0.0, 0.0)) -> "RegionSpec":
        return cls(kind="ball", radius=radius, center=tuple(center))

    @classmethod
    def annulus(cls, r_inner: float, r_outer: float) -> "RegionSpec":
        return cls(kind="annulus", r_inner=r_inner, r_outer=r_outer)

    @classmethod
    def disc_segment(cls, half_width: float, center_angle: float = 0.0,
                     radius: float = 1.0) -> "RegionSpec":
        return cls(kind="disc_segment", arc_half_width=half_width,
                   arc_center_angle=center_angle, radius=radius)

    @property
    def circle_radius(self) -> float:
        """Radius of the circle carrying a disc_segment arc."""
        return 1.0 if self.radius is None else self.radius


class ProfileSpec(BaseModel):
    """Value profile of a phantom component inside its region."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["constant", "radial_bump", "cosine_mode"] = Field(..., description="Profile type")
    value: float = Field(1.0, description="Constant value or amplitude")
    k: int = Field(0, ge=0, description="Angular order of a cosine_mode profile")
    radial_profile: Literal["bump", "constant"] = Field(
        "bump", description="Radial factor a(r) of a cosine_mode profile"
    )

    @classmethod
    def constant(cls, value: float = 1.0) -> "ProfileSpec":
        return cls(kind="constant", value=value)

    @classmethod
    def radial_bump(cls, value: float = 1.0) -> "ProfileSpec":
        return cls(kind="radial_bump", value=value)

    @classmethod
    def cosine_mode(cls, k: int, value: float = 1.0,
                    radial_profile: Literal["bump", "constant"] = "bump") -> "ProfileSpec":
        return cls(kind="cosine_mode", k=k, value=value, radial_profile=radial_profile)


class PhantomComponent(BaseModel):
    model_config = ConfigDict(frozen=True)

    region: RegionSpec
    profile: ProfileSpec


class PhantomSpec(BaseModel):
    """Sum of profiles, each supported in its own region."""
    model_config = ConfigDict(frozen=True)

    components: tuple[PhantomComponent, ...] = Field((), description="(region, profile) pairs")

    @classmethod
    def single(cls, region: RegionSpec, profile: ProfileSpec) -> "PhantomSpec":
        return cls(components=(PhantomComponent(region=region, profile=profile),))

    def scaled(self, factor: float) -> "PhantomSpec":
        return PhantomSpec(components=tuple(
            PhantomComponent(region=c.region,
                             profile=c.profile.model_copy(update={"value": c.profile.value * factor}))
            for c in self.components
        ))


class SinogramGeometry(BaseModel):
    """Parallel-beam line set for an n x n grid on [-1, 1]^2.

    Directions theta_j = 2 pi j / n_theta cover the full circle (oriented
    lines); offsets s_i span [-sqrt 2, sqrt 2] uniformly.
    """
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=2, description="Grid cells per axis")
    n_theta: int = Field(..., ge=2, description="Number of oriented directions (even)")
    n_s: int = Field(..., ge=2, description="Number of offsets")

    @model_validator(mode="after")
    def _check_even(self) -> "SinogramGeometry":
        if self.n_theta % 2:
            raise ValueError(f"n_theta must be even, got {self.n_theta}")
        return self

    @classmethod
    def for_grid(cls, n: int, n_theta: int | None = None, n_s: int | None = None) -> "SinogramGeometry":
        """Default sampling: 2n directions and offset spacing close to the cell width."""
        if n_theta is None:
            n_theta = 2 * n
        if n_s is None:
            n_s = 2 * math.ceil(n / math.sqrt(2.0)) + 1
        return cls(n=n, n_theta=n_theta, n_s=n_s)

    @property
    def h(self) -> float:
        return 2.0 / self.n

    @property
    def ds(self) -> float:
        return 2.0 * math.sqrt(2.0) / (self.n_s - 1)

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi / self.n_theta


class SpeedProfile(BaseModel):
    """Radial background speed c0(r): constant, or linear from center to surface."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["constant", "linear"] = "constant"
    center: float = Field(1.0, gt=0, description="Speed at r = 0")
    surface: float = Field(1.0, gt=0, description="Speed at r = 1 (linear profile)")

    @property
    def minimum(self) -> float:
        return self.center if self.kind == "constant" else min(self.center, self.surface)


class SplitScenario(BaseModel):
    """Shear-wave splitting scenario in the linearized, direction-independent regime."""
    model_config = ConfigDict(frozen=True)

    c0: SpeedProfile = Field(default_factory=SpeedProfile, description="Background speed")
    dc1: PhantomSpec = Field(default_factory=PhantomSpec, description="Perturbation of the first qS speed")
    dc2: PhantomSpec = Field(default_factory=PhantomSpec, description="Perturbation of the second qS speed")
    geometry: RegionSpec = Field(default_factory=lambda: RegionSpec.annulus(0.5, 0.9),
                                 description="Annulus carrying the perturbations")
    inner_radius: float = Field(0.2, gt=0, description="Lines of the data set meet B(0, inner_radius)")
    direction_dependent: bool = Field(False, description="Perturbations depend on the ray direction")

    @model_validator(mode="after")
    def _check_scenario(self) -> "SplitScenario":
        if self.direction_dependent:
            raise ValueError(
                "direction-dependent perturbations are not modelled; "
                "only dc_i(x) independent of the ray direction is supported (future work)"
            )
        if self.geometry.kind != "annulus":
            raise ValueError("scenario geometry must be an annulus")
        if self.inner_radius >= self.geometry.r_inner:
            raise ValueError("inner_radius must lie inside the annulus hole")
        return self


class ReconReport(BaseModel):
    """Outcome of a reconstruction run."""

    method: Literal["cgls", "landweber", "direct"] = "cgls"
    iterations: int = 0
    converged: bool = False
    relative_residual: float = float("nan")
    relative_error: float | None = None
    sigma_min: float | None = None
    sigma_max: float | None = None
    seed: int | None = None
    residual_history: list[float] = Field(default_factory=list)

    def to_text(self) -> str:
        """Plain-text ``key=value`` serialization (history omitted)."""
        data = self.model_dump(exclude={"residual_history"})
        return "".join(f"{k}={'' if v is None else v}\n" for k, v in data.items())


class RunConfig(BaseModel):
    """One CLI invocation: command, key=value parameters and paths."""

    command: str = Field(..., description="Command name")
    params: dict[str, str] = Field(default_factory=dict, description="key=value parameters")
    inputs: list[Path] = Field(default_factory=list, description="Input files")
    out: Path | None = Field(None, description="Output path")
    csv: Path | None = Field(None, description="Optional CSV export path (2D fields)")
    seed: int = Field(0, ge=0, description="Random seed")
    threads: int | None = Field(None, ge=1, description="Worker threads")

    @model_validator(mode="after")
    def _check_paths(self) -> "RunConfig":
        for path in self.inputs:
            if not path.is_file():
                raise ValueError(f"input file {path} does not exist")
        for path in (self.out, self.csv):
            if path is not None and not path.parent.is_dir():
                raise ValueError(f"output directory {path.parent} does not exist")
        return self
