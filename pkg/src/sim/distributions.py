"""Stochastic parameters: constant, exponential and uniform families."""

from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .random import RandomStream


class _DistributionBase(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Constant(_DistributionBase):
    kind: Literal["constant"] = "constant"
    value: float = Field(ge=0)

    @property
    def mean(self) -> float:
        return self.value

    def __str__(self) -> str:
        return f"Constant({self.value:g})"


class Exponential(_DistributionBase):
    kind: Literal["exponential"] = "exponential"
    mean: float = Field(gt=0)

    def __str__(self) -> str:
        return f"Exponential({self.mean:g})"


class Uniform(_DistributionBase):
    kind: Literal["uniform"] = "uniform"
    low: float = Field(ge=0)
    high: float

    @model_validator(mode="after")
    def _check_bounds(self) -> "Uniform":
        if not self.low < self.high:
            raise ValueError(f"uniform needs low < high, got low={self.low}, high={self.high}")
        return self

    @property
    def mean(self) -> float:
        return (self.low + self.high) / 2.0

    def __str__(self) -> str:
        return f"Uniform({self.low:g},{self.high:g})"


Distribution = Annotated[Union[Constant, Exponential, Uniform], Field(discriminator="kind")]


def sample(d: Union[Constant, Exponential, Uniform], s: RandomStream) -> float:
    """Draw one value of `d` from stream `s`.

    Constant returns its value exactly, Uniform a value in [low, high),
    Exponential a non-negative value with the configured mean.
    """
    if isinstance(d, Constant):
        return d.value
    if isinstance(d, Exponential):
        return s.exponential(d.mean)
    return s.uniform(d.low, d.high)
