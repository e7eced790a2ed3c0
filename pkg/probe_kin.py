"""Dev probe: IK closure, FD Jacobian agreement, mode handling."""
import numpy as np

from prsynth.families import get_family
from prsynth.model import RobotModel
from prsynth import kinematics as K

rng = np.random.default_rng(0)

# ---- planar ----
fam = get_family("planar-RRR")
model = RobotModel(fam, [1.0, 0.55, 0.15, 0.5, 0.5])
x = np.array([0.08, -0.05, 0.2])
st = K.solve_ik(model, x, "out")
full, red = K.constraint_residual(model, st)
print("planar residual:", np.linalg.norm(full), "reduced:", np.linalg.norm(red))
print("modes:", st.assembly_modes)

jac = K.jacobians(model, st)
print("planar cond:", jac.condition)

# FD check of J_qx via solve_ik
h = 1e-6
J_fd = np.zeros_like(jac.J_qx)
for k in range(model.n):
    xp, xm = x.copy(), x.copy()
    xp[k] += h; xm[k] -= h
    qp = K.solve_ik(model, xp, st).q
    qm = K.solve_ik(model, xm, st).q
    J_fd[:, k] = (qp - qm) / (2 * h)
print("planar J_qx FD err:", np.abs(J_fd - jac.J_qx).max())

# ---- RUS ----
fam = get_family("RUS")
p = fam.default_params()
model = RobotModel(fam, p)
print("RUS params:", dict(zip(fam.param_names, p)))
for z in np.arrange if False else np.linspace(1.0, 2.2, 13):
    x6 = np.array([0.0, 0.0, z, 0.0, 0.0, 0.0])
    try:
        st = K.solve_ik(model, x6, "out")
        full, _ = K.constraint_residual(model, st, include_reduced=False)
        jac = K.jacobians(model, st)
        print(f" z={z:.2f} ok res={np.linalg.norm(full):.2e} cond={jac.condition:8.2f} modes={st.assembly_modes} q1={st.q_a.round(2)}")
    except K.KinematicsError as e:
        print(f" z={z:.2f} FAIL {type(e).__name__}")
