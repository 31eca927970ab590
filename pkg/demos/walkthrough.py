"""From random monad data to a solution of the real Nahm equation.

Run with ``python3 demos/walkthrough.py``.
"""
import numpy as np

from monadnahm import cohomology as coh
from monadnahm import nahm_flow as F
from monadnahm import resolutions as R
from monadnahm.monad_core import build_MN, check_genericity, generate_random, verify_monad_equations
from monadnahm.nahm_bridge import PathSpec, from_nahm_complex, to_nahm_complex, verify_nahm_complex


def section(title):
    print(f"\n== {title}")


data = generate_random(2, 1, seed=42)
section("monad data k=2, j=1")
print("equation residuals (relative):", np.round(verify_monad_equations(data).relative, 18))
print("genericity flags:", check_genericity(data).flags)

section("cohomology")
for tag in coh.TAGS:
    print(f"{tag:7s} h^*(0,-1) =", coh.cech_cohomology_dims(data, tag, (0, -1)),
          " predicted:", coh.vanishing_predictions(2, 1, tag, (0, -1)))

section("torsion supports and intertwining")
for label in ("Qinf0", "Q0inf"):
    print(label, np.round(R.torsion_support(data, label).points, 6))
print("intertwining residual:", R.verify_intertwining(data))
print("reducibility witnesses:", R.reducibility_scan(data))

section("Nahm complex and back")
ncd = to_nahm_complex(data)
print("all checks pass:", verify_nahm_complex(ncd).ok)
print("residue eigenvalues:", np.sort(np.linalg.eigvals(ncd.X_res).real))
back = from_nahm_complex(ncd)
print("eig(M) before:", np.round(np.sort_complex(np.linalg.eigvals(build_MN(data)[0])), 8))
print("eig(M) after: ", np.round(np.sort_complex(np.linalg.eigvals(build_MN(back)[0])), 8))

section("flow to the real equation (j=0, k=3)")
d = F.from_nahm_complex(to_nahm_complex(generate_random(3, 0, seed=1),
                                        PathSpec(n_small=256, n_big=256, pole_points=32)))
out, trace = F.flow_to_solution(d, tol=1e-8, return_trace=True)
for step, (e, r, c) in enumerate(zip(trace.energy, trace.real_residual, trace.complex_residual)):
    print(f"step {step:2d}  energy {e:.3e}  real {r:.3e}  complex {c:.3e}")
