"""Write synthetic curvature fixtures used by the demo configs.

    python demos/make_fixtures.py demos/configs
"""
import json
import sys
from pathlib import Path

import numpy as np

from parabolic_scales.cr import CRSample
from parabolic_scales.legendrean import LegendreanSample


def _dump(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {path}")


def main(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(7)
    n = 3
    einstein = [LegendreanSample.einstein(n, 1.0) for _ in range(4)]
    _dump(out / "legendrean_lambda_one.json",
          {"geometry": "legendrean", "n": n, "samples": [s.to_json() for s in einstein],
           "curve_meta": {"note": "pure-trace samples with lambda = 1"}})
    model = [LegendreanSample.zero(n) for _ in range(2)]
    _dump(out / "legendrean_lambda_zero.json",
          {"geometry": "legendrean", "n": n, "samples": [s.to_json() for s in model],
           "curve_meta": {"note": "flat model, all curvature components vanish"}})
    mixed = einstein[:3] + [LegendreanSample.random(n, rng)]
    _dump(out / "legendrean_mixed.json",
          {"geometry": "legendrean", "n": n, "samples": [s.to_json() for s in mixed]})
    h = np.diag([1.0, 1.0, -1.0]).astype(complex)
    cr = [CRSample.einstein(n, 0.5, h) for _ in range(3)]
    doc = {"geometry": "cr", "n": n, "samples": [s.to_json() for s in cr]}
    _dump(out / "cr_einstein.json", doc)


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "configs"))
