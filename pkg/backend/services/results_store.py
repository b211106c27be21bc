"""
Persistence of run outputs.

Layout of an output directory:
    manifest.json
    draws/alpha_star.csv, draws/pi.csv
    summaries/allocations.csv, summaries/map_labels.csv, summaries/labels.txt,
    summaries/ternary.csv, summaries/bipartite.graphml
    tables/pcm_raw.csv, tables/pcm_rescaled.csv, tables/dic_scan.csv,
    tables/cluster_sizes.csv, tables/pi_summary.csv, tables/parent_weights.csv
"""
import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from backend.ingestion.incidence_reader import write_labels
from backend.models.entities import (
    Combiner, DicResult, IncidenceMatrix, ModelKind, PCM, PosteriorSamples, RunManifest
)
from backend.models.errors import DataFormatError
from backend.services.mixture_algebra import parent_set_label

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


class ResultsStore:
    """Single writer for one output directory"""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def _csv(self, frame: pd.DataFrame, relative: str, index: bool = False) -> Path:
        path = self.out_dir / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=index, float_format=FLOAT_FORMAT)
        return path

    def _heir_columns(self, samples_kind: ModelKind, K: int, H: int) -> List[str]:
        if samples_kind == ModelKind.FLAT:
            return [f"component_{m + 1}" for m in range(H)]
        return [parent_set_label(c, K) for c in range(H)]

    # --- Writers ---

    def write_draws(self, samples: PosteriorSamples) -> None:
        T, K, d = samples.pi.shape
        alpha = pd.DataFrame(samples.alpha_star, columns=[f"alpha_star_{h + 1}" for h in range(samples.n_heirs)])
        alpha.insert(0, "sweep", samples.sweeps)
        self._csv(alpha, "draws/alpha_star.csv")
        pi = pd.DataFrame(
            samples.pi.reshape(T, K * d),
            columns=[f"pi_{k + 1}_{j + 1}" for k in range(K) for j in range(d)],
        )
        pi.insert(0, "sweep", samples.sweeps)
        self._csv(pi, "draws/pi.csv")

    def write_allocations(self, avg: np.ndarray, data: IncidenceMatrix, samples: PosteriorSamples) -> None:
        columns = self._heir_columns(samples.kind, samples.K, avg.shape[1])
        frame = pd.DataFrame(avg, index=pd.Index(data.actor_labels, name="actor"), columns=columns)
        self._csv(frame, "summaries/allocations.csv", index=True)

    def write_labels(self, labels: np.ndarray, data: IncidenceMatrix, samples: PosteriorSamples) -> None:
        names = self._heir_columns(samples.kind, samples.K, samples.n_heirs)
        frame = pd.DataFrame({
            "actor": data.actor_labels,
            "heir": np.asarray(labels) + 1,
            "cluster": [names[c] for c in labels],
            "attendances": data.attendance_counts(),
        })
        self._csv(frame, "summaries/map_labels.csv")
        write_labels(labels, self.out_dir / "summaries" / "labels.txt")

    def write_ternary(self, coords: np.ndarray, data: IncidenceMatrix, samples: PosteriorSamples) -> None:
        names = self._heir_columns(samples.kind, samples.K, samples.n_heirs)[1:]
        units = coords[:, 0].astype(int)
        frame = pd.DataFrame(coords[:, 1:], columns=names)
        frame.insert(0, "actor", [data.actor_labels[i] for i in units])
        self._csv(frame, "summaries/ternary.csv")

    def write_pcm(self, pcm: PCM, samples: PosteriorSamples) -> None:
        names = self._heir_columns(samples.kind, samples.K, pcm.raw.shape[0])
        index = pd.Index(names, name="map_cluster")
        raw = pd.DataFrame(pcm.raw, index=index, columns=names)
        raw["units"] = pcm.row_units
        self._csv(raw, "tables/pcm_raw.csv", index=True)
        self._csv(pd.DataFrame(pcm.rescaled, index=index, columns=names), "tables/pcm_rescaled.csv", index=True)

    def write_dic_table(self, results: Iterable[DicResult], selected_K: Optional[int] = None) -> None:
        frame = pd.DataFrame([r.model_dump() for r in results])
        if selected_K is not None and not frame.empty:
            frame["selected"] = frame["K"] == selected_K
        self._csv(frame, "tables/dic_scan.csv")

    def write_table(self, frame: pd.DataFrame, name: str) -> Path:
        return self._csv(frame, f"tables/{name}.csv")

    def write_manifest(self, manifest: RunManifest) -> Path:
        path = self.out_dir / "manifest.json"
        path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"Wrote manifest to {path}")
        return path

    def write_results(
        self,
        samples: PosteriorSamples,
        data: IncidenceMatrix,
        avg: np.ndarray,
        labels: np.ndarray,
        pcm: PCM,
        dic_results: Iterable[DicResult] = (),
        selected_K: Optional[int] = None,
        ternary: Optional[np.ndarray] = None,
        extra_tables: Optional[dict] = None,
    ) -> None:
        """Everything a fit produces, except the manifest"""
        self.write_draws(samples)
        self.write_allocations(avg, data, samples)
        self.write_labels(labels, data, samples)
        self.write_pcm(pcm, samples)
        self.write_dic_table(dic_results, selected_K)
        if ternary is not None:
            self.write_ternary(ternary, data, samples)
        for name, frame in (extra_tables or {}).items():
            self.write_table(frame, name)


# --- Readers ---

def read_manifest(run_dir: Union[str, Path]) -> RunManifest:
    path = Path(run_dir) / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"No manifest in {run_dir}")
    return RunManifest(**json.loads(path.read_text(encoding="utf-8")))


def read_draws(run_dir: Union[str, Path]) -> PosteriorSamples:
    """Rebuild the retained trajectory (without z*) from a run directory"""
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir)
    model = manifest.model
    if not {"kind", "K", "combiner"} <= model.keys():
        raise DataFormatError(f"Manifest in {run_dir} does not describe stored draws")
    alpha = pd.read_csv(run_dir / "draws" / "alpha_star.csv")
    pi = pd.read_csv(run_dir / "draws" / "pi.csv")
    sweeps = alpha.pop("sweep").to_numpy(dtype=np.int64)
    pi.pop("sweep")
    T = len(alpha)
    K = int(model["K"])
    pi_arr = pi.to_numpy(dtype=float).reshape(T, K, -1)
    return PosteriorSamples(
        kind=ModelKind(model["kind"]),
        K=K,
        combiner=Combiner(model["combiner"]),
        alpha_star=alpha.to_numpy(dtype=float),
        pi=pi_arr,
        z_star=np.empty((T, 0), dtype=np.int32),
        sweeps=sweeps,
        seed=manifest.seed,
    )
