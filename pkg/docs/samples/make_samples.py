"""Regenerate the sample inputs used in the README and docs/formats.md."""
import json
from pathlib import Path

import numpy as np

from qhyper import io as qio
from qhyper.channels import Channel
from qhyper.correlations import QnsCorrelation

here = Path(__file__).parent


def write(name, obj):
    (here / name).write_text(json.dumps(obj, indent=1) + "\n")


# identity channel on M_{X2 Y1} = M_2 (x) M_2, seen as M_{X2 Y1} -> M_{X1 Y2}
write("identity-channel.json", qio.encode_channel(Channel.identity((2, 2)), "X2Y1", "X1Y2"))

# U = span{e0bar (x) e0 + i e1bar (x) e1} over (X, Y), and the iff-arrow of (Ubar, U)
U = {"signature": [{"set": "X", "size": 2, "barred": True}, {"set": "Y", "size": 2, "barred": False}],
     "basis": [[[1, 0], [0, 0], [0, 0], [0, 1]]]}
Ubar = {"signature": [{"set": "X", "size": 2, "barred": False}, {"set": "Y", "size": 2, "barred": True}],
        "basis": [[[1, 0], [0, 0], [0, 0], [0, -1]]]}
write("u-iff-u.json", {"arrow": "iff", "U1": Ubar, "U2": U})

delta2 = {"X": 2, "Y": 2, "edges": [[0, 0], [1, 1]]}
write("delta2.json", delta2)
write("delta2-delta2.json", {"U1": {"classical": delta2}, "U2": {"classical": delta2}, "mode": "hom", "type": "ns"})

# a channel M_{XY} -> M_{AB} that copies the X input to the B output
N = np.zeros((4, 4))
for x in range(2):
    for y in range(2):
        N[0 * 2 + x, x * 2 + y] = 1.0  # a = 0, b = x
write("signalling.json", {"quad": [2, 2, 2, 2], "channel": {"stochastic": N.tolist()}})

write("identity-correlation.json", qio.encode_correlation(QnsCorrelation.identity(2, 2)))
