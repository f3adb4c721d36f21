"""Named parameter sets selectable from a run configuration.

Each preset maps section -> key -> value and may suggest a default pipeline,
used only when the configuration does not name one. Figure presets carry
the stage settings of the corresponding measurement; component presets
carry hardware numbers.
"""
from . import constants as K

PRESETS = {
    # -- joint spectra ------------------------------------------------------
    "paper-fig2a": {
        "pipeline": "jsi",
        "note": "stages at the temporal origin, no modulation",
        "values": {"synthesis": {"dt_h": 0.0, "dt_v": 0.0, "phase": 0.0}},
    },
    "paper-fig2b": {
        "pipeline": "jsi",
        "note": "M1/M2 displaced by +-100 um, 750 GHz bins",
        "values": {"synthesis": {"d1": 100e-6, "d2": -100e-6, "d3": 0.0}},
    },
    "paper-fig2c": {
        "pipeline": "jsi",
        "note": "M1/M2 displaced by +-500 um, 150 GHz bins",
        "values": {"synthesis": {"d1": 500e-6, "d2": -500e-6, "d3": 0.0}},
    },
    "paper-fig2d": {
        "pipeline": "jsi",
        "note": "10 ps antidiagonal separation, 100 GHz bins",
        "values": {"synthesis": {"dt_minus": 10e-12, "phase": 0.0}},
    },
    "paper-fig2e": {
        "pipeline": "jsi",
        "note": "20 ps antidiagonal separation, 50 GHz bins",
        "values": {"synthesis": {"dt_minus": 20e-12, "phase": 0.0}},
    },
    "paper-fig2f": {
        "pipeline": "jsi",
        "note": "40 ps antidiagonal separation, 25 GHz bins",
        "values": {"synthesis": {"dt_minus": 40e-12, "phase": 0.0}},
    },
    "paper-fig2g": {
        "pipeline": "jsi",
        "note": "80 ps antidiagonal separation, 12.5 GHz bins",
        "values": {"synthesis": {"dt_minus": 80e-12, "phase": 0.0}},
    },
    # -- phase control and HOM ---------------------------------------------
    "paper-fig3a": {
        "pipeline": "jsi",
        "note": "100 GHz bins, pump mirror scanned over 0, lambda_p/4, lambda_p/2",
        "values": {
            "synthesis": {
                "dt_minus": 10e-12,
                "d3_scan": [0.0, K.PUMP_WAVELENGTH / 4, K.PUMP_WAVELENGTH / 2],
            }
        },
    },
    "paper-fig3b": {
        "pipeline": "hom",
        "note": "HOM scan at 50 GHz bin spacing",
        "values": {"synthesis": {"dt_minus": 20e-12, "phase": 0.0}},
    },
    "paper-fig3c": {
        "pipeline": "hom",
        "note": "HOM scan at 100 GHz, pump mirror at the origin",
        "values": {"synthesis": {"dt_minus": 10e-12, "d3": 0.0}},
    },
    "paper-fig3d": {
        "pipeline": "hom",
        "note": "HOM scan at 100 GHz, pump mirror moved by lambda_p/4 (phase pi)",
        "values": {"synthesis": {"dt_minus": 10e-12, "d3": K.PUMP_WAVELENGTH / 4}},
    },
    # -- two-node network -------------------------------------------------
    "paper-fig5a": {
        "pipeline": "netsim",
        "note": "unmodulated source over the campus link",
        "values": {"synthesis": {"dt_minus": 0.0, "phase": 0.0}, "network": {"duration": 2.0}},
    },
    "paper-fig5b": {
        "pipeline": "netsim",
        "note": "290 GHz bins over the campus link",
        "values": {"synthesis": {"dt_minus": 1 / 290e9, "phase": 0.0}, "network": {"duration": 5.2}},
    },
    "paper-fig5c": {
        "pipeline": "netsim",
        "note": "98 GHz bins over the campus link",
        "values": {"synthesis": {"dt_minus": 1 / 98e9, "phase": 0.0}, "network": {"duration": 5.2}},
    },
    # -- hardware ---------------------------------------------------------
    "snspd-paper": {
        "note": "SNSPD: 70 % efficiency, 80 ps FWHM jitter, 100 dark counts/s",
        "values": {
            "detection": {
                "efficiency": K.SNSPD_EFFICIENCY,
                "jitter_fwhm": K.SNSPD_JITTER_FWHM,
                "dark_rate": K.SNSPD_DARK_RATE,
            }
        },
    },
    "system-130ps": {
        "note": "total timing jitter of the spectrometer, overrides composition",
        "values": {"detection": {"system_jitter_fwhm": K.SYSTEM_JITTER_FWHM}},
    },
    "dcf-50km": {
        "note": "DCF module for 50 km SMF, -895 ps/nm at 1565 nm",
        "values": {"detection": {"dispersion_ps_nm": -895.0, "lambda_ref": K.DCF_LAMBDA_REF, "dispersion_scale": 1.0}},
    },
    "dcf-50km-x3": {
        "note": "three times the 50 km module dispersion",
        "values": {"detection": {"dispersion_ps_nm": -895.0, "lambda_ref": K.DCF_LAMBDA_REF, "dispersion_scale": 3.0}},
    },
    "dcf-15km": {
        "note": "local DCF for 15 km SMF, 895 * 15 / 50 ps/nm",
        "values": {"network": {"local_dispersion_ps_nm": -268.5}},
    },
    "wr-paper": {
        "note": "clock sync with 28 ps precision, pulse-train referenced folding",
        "values": {"network": {"sync_jitter": K.SYNC_JITTER, "referenced": True, "remote_drift": 0.0}},
    },
    "paper-rate": {
        "note": "587 pairs/s/mW at 341 mW",
        "values": {"detection": {"pair_rate": K.PAIR_RATE}},
    },
    "klyshko-paper": {
        "note": "all losses folded into 9.97 % per arm",
        "values": {"detection": {"efficiency": K.KLYSHKO_EFFICIENCY, "dark_rate": 0.0}},
    },
}


def preset_names():
    return sorted(PRESETS)
