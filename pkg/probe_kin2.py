"""Dev probe 2: FD checks for spatial families, contact jacobians, modes."""
import numpy as np

from prsynth.families import FAMILIES, get_family
from prsynth.model import RobotModel
from prsynth import kinematics as K

rng = np.random.default_rng(1)

model = RobotModel(get_family("RUS"), get_family("RUS").default_params())
x = np.array([0.03, -0.04, 1.45, 0.1, -0.08, 0.15])
st = K.solve_ik(model, x, "out")
jac = K.jacobians(model, st)

h = 1e-6
J_fd = np.zeros_like(jac.J_qx)
for k in range(model.n):
    xp, xm = x.copy(), x.copy()
    xp[k] += h; xm[k] -= h
    J_fd[:, k] = (K.solve_ik(model, xp, st).q - K.solve_ik(model, xm, st).q) / (2 * h)
print("RUS J_qx FD err:", np.abs(J_fd - jac.J_qx).max())
print("composition check J_qa_x @ J_xqa - I:", np.abs(jac.J_qa_x @ jac.J_xqa - np.eye(6)).max())

# contact jacobian FD along actuated perturbation (via full re-solve)
pt = K.MaterialPoint.on_segment(2, 1, 0.6)
cj = K.contact_jacobian(model, st, pt)
# FD: perturb pose along J_xqa columns:  x(qa) -> point position
Jt_fd = np.zeros((3, 6))
for k in range(6):
    dqa = np.zeros(6); dqa[k] = h
    xp = x + jac.J_xqa @ dqa
    xm = x - jac.J_xqa @ dqa
    stp = K.solve_ik(model, xp, st); stm = K.solve_ik(model, xm, st)
    pp = K.contact_point_position(model, stp, pt)
    pm = K.contact_point_position(model, stm, pt)
    Jt_fd[:, k] = (pp - pm) / (2 * h)
print("contact J translational FD err:", np.abs(Jt_fd - cj.J_xC_qa[:3]).max())

# platform-origin identity
cj0 = K.contact_jacobian(model, st, K.MaterialPoint.on_platform())
print("platform identity err:", np.abs(cj0.J_xC_qa[:3] - jac.J_xqa[:3]).max())

# base point zero rows
cjb = K.contact_jacobian(model, st, K.MaterialPoint.on_segment(0, 0, 0.0))
print("base point translational rows:", np.abs(cjb.J_xC_qa[:3]).max())

# virtual work
w = K.Wrench(rng.normal(size=3) * 50, rng.normal(size=3) * 5)
tau = K.project_wrench(cj, w)
qad = rng.normal(size=6)
vc = cj.J_xC_qa @ qad
print("virtual work rel err:", abs(w.as_array() @ vc - tau @ qad) / max(abs(tau @ qad), 1e-30))

# modes
for pattern in ("in", "alternating"):
    try:
        sti = K.solve_ik(model, x, pattern)
        print(pattern, "modes:", sti.assembly_modes, "res ok")
    except K.KinematicsError as e:
        print(pattern, "FAIL", type(e).__name__, e)

# other families at their own home-ish pose
for name in ("RRRS", "RRUU", "RURU", "RUUR"):
    fam = get_family(name)
    m = RobotModel(fam, fam.default_params())
    ok = 0
    zs = np.linspace(1.0, 2.2, 13)
    first = None
    for z in zs:
        try:
            stz = K.solve_ik(m, np.array([0, 0, z, 0, 0, 0.0]), "out")
            ok += 1
            if first is None:
                first = z
        except K.KinematicsError:
            pass
    print(f"{name}: IK ok at {ok}/13 heights, first={first}")
