from __future__ import annotations
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from utils.errors import DataValidationError, PairingError

Modality = Literal["audio", "visual"]
Split = Literal["train", "test"]


class FeatureMatrix(BaseModel):
    """m×d features of one modality (rows are clips)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    modality: Modality
    values: np.ndarray
    source: str = "synthetic"

    @field_validator("values")
    @classmethod
    def _finite_matrix(cls, v: np.ndarray) -> np.ndarray:
        v = np.ascontiguousarray(v, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"features must be a 2-D matrix, got shape {v.shape}")
        bad = np.flatnonzero(~np.isfinite(v).all(axis=1))
        if bad.size:
            raise ValueError(f"non-finite value in row {int(bad[0])}")
        v.setflags(write=False)
        return v

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


class LabelVector(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ids: np.ndarray
    classes: int

    @model_validator(mode="after")
    def _in_range(self) -> "LabelVector":
        ids = np.asarray(self.ids)
        if ids.ndim != 1:
            raise ValueError("labels must be a 1-D vector")
        out = np.flatnonzero((ids < 0) | (ids >= self.classes))
        if out.size:
            row = int(out[0])
            raise ValueError(f"label {int(ids[row])} at row {row} outside [0, {self.classes})")
        return self

    @field_validator("ids")
    @classmethod
    def _as_int(cls, v: np.ndarray) -> np.ndarray:
        arr = np.asarray(v)
        if arr.size and not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("labels must be integers")
        arr = arr.astype(np.int64)
        arr.setflags(write=False)
        return arr

    @property
    def m(self) -> int:
        return int(self.ids.shape[0])

    def one_hot(self) -> np.ndarray:
        y = np.zeros((self.m, self.classes))
        y[np.arange(self.m), self.ids] = 1.0
        return y


class PairedDataset(BaseModel):
    """Row i of audio, visual and labels describe the same clip."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    audio: FeatureMatrix
    visual: FeatureMatrix
    labels: LabelVector
    split: Split = "train"

    @model_validator(mode="after")
    def _paired(self) -> "PairedDataset":
        if self.audio.modality != "audio" or self.visual.modality != "visual":
            raise DataValidationError("audio/visual matrices carry the wrong modality tag")
        if not (self.audio.m == self.visual.m == self.labels.m):
            raise PairingError(
                f"row counts differ: audio={self.audio.m} ({self.audio.source}), "
                f"visual={self.visual.m} ({self.visual.source}), labels={self.labels.m}"
            )
        return self

    @property
    def m(self) -> int:
        return self.audio.m

    @property
    def classes(self) -> int:
        return self.labels.classes

    def features(self, modality: str) -> np.ndarray:
        return self.visual.values if modality == "visual" else self.audio.values

    def subset(self, idx: np.ndarray) -> "PairedDataset":
        return PairedDataset(
            audio=FeatureMatrix(modality="audio", values=self.audio.values[idx], source=self.audio.source),
            visual=FeatureMatrix(modality="visual", values=self.visual.values[idx], source=self.visual.source),
            labels=LabelVector(ids=self.labels.ids[idx], classes=self.classes),
            split=self.split,
        )
