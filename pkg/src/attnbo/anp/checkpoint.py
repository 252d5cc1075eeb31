"""Weight checkpoints: an ``.npz`` archive with a format version and the
architecture config, one float64 array per parameter (shapes carried by
the array headers).  Round trips are bit-exact."""

from __future__ import annotations

import json

import numpy as np

from ..errors import ConfigurationError
from .model import AnpModel

FORMAT_VERSION = 1


def save_checkpoint(model, path):
    arrays = {f"param/{name}": arr for name, arr in model.state_dict().items()}
    arrays["meta/version"] = np.array(FORMAT_VERSION)
    arrays["meta/config"] = np.array(json.dumps(model.config()))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as archive:
        version = int(archive["meta/version"])
        if version != FORMAT_VERSION:
            raise ConfigurationError(f"unsupported checkpoint version {version}")
        config = json.loads(str(archive["meta/config"]))
        state = {k[len("param/") :]: archive[k] for k in archive.files if k.startswith("param/")}
    model = AnpModel(
        config["x_dim"],
        seed=config["seed"],
        latent_dim=config["latent_dim"],
        hidden=config["hidden"],
        heads=config["heads"],
        slope=config["slope"],
    )
    model.load_state_dict(state)
    return model
