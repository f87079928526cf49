"""Plot rendering for simulation and optimization outputs.

Plots are regenerated views of the emitted tables, never sources of
truth.  All figures are written as SVG.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_knee_forces(report, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    t = report.column("time")
    ax.plot(t, report.knee_force_magnitude("right"), label="right knee")
    ax.plot(t, report.knee_force_magnitude("left"), "--", label="left knee")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("knee joint force [N]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_joint_torques(report, path):
    names = ("tau_T", "tau_HR", "tau_KR", "tau_AR", "tau_HL", "tau_KL", "tau_AL")
    taus = np.stack([r.tau for r in report.rows])
    t = report.column("time")
    fig, ax = plt.subplots(figsize=(7, 4))
    for j, name in enumerate(names):
        ax.plot(t, taus[:, j], label=name)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("joint torque [N m]")
    ax.legend(ncol=4, fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_torque_speed(report, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    plotted = False
    for side, marker in (("left", "o"), ("right", "s")):
        rows = [r for r in report.rows
                if getattr(r, f"hri_{side}") is not None]
        if not rows:
            continue
        torque = [getattr(r, f"hri_{side}").tm for r in rows]
        rpm = [getattr(r, f"motor_speed_{side}") * 60.0 / (2 * np.pi)
               for r in rows]
        ax.plot(rpm, torque, marker, ms=3, ls="none", label=f"{side} motor")
        plotted = True
    ax.set_xlabel("motor speed [rev/min]")
    ax.set_ylabel("motor torque [N m]")
    if plotted:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_parameter_trace(result, path):
    names = ("L", "r", "R", "theta_opt")
    hist = result.param_history
    fig, axes = plt.subplots(5, 1, figsize=(7, 9), sharex=True)
    axes[0].plot(result.cost_history)
    axes[0].set_ylabel("best cost")
    axes[0].set_yscale("log")
    for j, name in enumerate(names):
        axes[j + 1].plot(hist[:, j])
        axes[j + 1].set_ylabel(name)
    axes[-1].set_xlabel("iteration")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
