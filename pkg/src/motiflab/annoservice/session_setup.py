"""Wire a bench manifest plus per-model video directories into a live session.

Session config file (JSON, strict keys):
{
  "session_id": "demo",
  "model_x": "baseline", "model_y": "motif",
  "bench_dir": "bench",
  "videos": {"baseline": "runs/baseline/videos", "motif": "runs/motif/videos"},
  "required_votes": 5, "min_watch_seconds": 60.0, "seed": 0,
  "log_path": "votes.log"
}

Videos follow the generation convention: <videos>/<image_id>__<prompt_id>/
holding meta.json + frame_XXXX.png. Pairs missing either model's generation
are excluded and listed in the session record.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import ContractError
from ..synthvid.bench import BenchManifest
from .service import AnnotationService, SessionConfig
from .store import VoteLog

_REQUIRED = ("session_id", "model_x", "model_y", "bench_dir", "videos")
_OPTIONAL = {"required_votes": 5, "min_watch_seconds": 60.0, "seed": 0,
             "log_path": "votes.log"}


def load_session_config(path: Path) -> dict:
    raw = json.loads(Path(path).read_text())
    unknown = set(raw) - set(_REQUIRED) - set(_OPTIONAL)
    if unknown:
        raise ContractError(f"{path}: unknown session config keys {sorted(unknown)}")
    missing = [k for k in _REQUIRED if k not in raw]
    if missing:
        raise ContractError(f"{path}: missing session config keys {missing}")
    cfg = dict(_OPTIONAL)
    cfg.update(raw)
    for m in (cfg["model_x"], cfg["model_y"]):
        if m not in cfg["videos"]:
            raise ContractError(f"{path}: no video dir for model {m!r}")
    return cfg


def build_session_pairs(manifest: BenchManifest, videos_x: Path, videos_y: Path):
    """(pairs, missing): one entry per manifest row with both videos present."""
    pairs = []
    missing = []
    for row in manifest.pairs:
        key = f"{row.image_id}__{row.prompt_id}"
        have_x = (videos_x / key / "meta.json").is_file()
        have_y = (videos_y / key / "meta.json").is_file()
        if not (have_x and have_y):
            missing.append(key)
            continue
        pairs.append({
            "pair_id": key,
            "prompt_text": row.prompt_text,
            "image_ref": f"bench/{row.image_file}",
            "video_x": f"vx:{key}",
            "video_y": f"vy:{key}",
        })
    return pairs, missing


def create_service_from_config(cfg: dict, log_path=None, clock=None):
    """Build the service + asset roots from a parsed session config."""
    import time as _time

    bench_dir = Path(cfg["bench_dir"])
    manifest = BenchManifest.from_tsv(bench_dir / "manifest.tsv")
    videos_x = Path(cfg["videos"][cfg["model_x"]])
    videos_y = Path(cfg["videos"][cfg["model_y"]])
    pairs, missing = build_session_pairs(manifest, videos_x, videos_y)
    if not pairs:
        raise ContractError("no pairs have generations from both models")
    log = VoteLog(log_path or cfg["log_path"])
    svc = AnnotationService(log=log, clock=clock or _time.time)
    session = SessionConfig(
        session_id=cfg["session_id"], model_x=cfg["model_x"],
        model_y=cfg["model_y"], required_votes=int(cfg["required_votes"]),
        min_watch_seconds=float(cfg["min_watch_seconds"]), seed=int(cfg["seed"]))
    svc.create_session(session, pairs, missing=missing)
    asset_roots = {"bench": bench_dir, "vx": videos_x, "vy": videos_y}
    return svc, asset_roots, missing


def serve_from_config(path: Path, port: int = 8008, static_dir=None,
                      log_path=None) -> int:
    from .http import make_server

    cfg = load_session_config(path)
    svc, asset_roots, missing = create_service_from_config(cfg, log_path=log_path)
    if missing:
        print(f"excluded {len(missing)} pairs with missing generations")
    server = make_server(svc, port=port, asset_roots=asset_roots,
                         static_dir=static_dir)
    host, bound_port = server.server_address
    print(f"annotation service on http://{host}:{bound_port}/ "
          f"(session {cfg['session_id']})", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0
