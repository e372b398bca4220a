import os
import sys

import numpy as np

from .sampling import random_cm_process, random_markov
from .schemas import dump_operator
from .spinboson import JcModel, jc_process_matrix, theta_star


def generate_sample_data(output_dir=None, seed: int = 7):
    """Write example matrix files for trying the command line.

    Args:
        output_dir: Optional directory to save the files. If None, will save to
                    'samples' in the current directory.
        seed: seed of the random Markov and classical-memory examples
    """
    if output_dir is None:
        output_dir = "samples"

    os.makedirs(output_dir, exist_ok=True)
    print(f"Saving sample matrices to: {os.path.abspath(output_dir)}")

    rng = np.random.default_rng(seed)
    markov = random_markov(rng)
    samples = {
        "markov.json": (markov.w, "tpm"),
        "cm_mixture.json": (random_cm_process(rng, size=4).w, "tpm"),
        # Vacuum Jaynes-Cummings process at gt = π/4, gτ = π/2, where the retriever value is 2.
        "jc_optimum.json": (jc_process_matrix(JcModel(g=1.0), np.pi / 4, np.pi / 2).w, "tpm"),
        "scaled.json": (markov.w * 1.5, "tpm"),
        "theta_star.json": (theta_star().theta, "retriever"),
    }

    for name, (op, kind) in samples.items():
        path = os.path.join(output_dir, name)
        try:
            dump_operator(op, path, kind=kind)
            print(f"✅ {name} saved to {path}")
            print(f"   Labels: {', '.join(op.names)}; dimension {op.dim}")
        except Exception as e:
            print(f"❌ Error writing {name}: {e}")


if __name__ == "__main__":
    # Allow specifying custom output directory as command line argument
    output_dir = sys.argv[1] if len(sys.argv) > 1 else None
    generate_sample_data(output_dir)
