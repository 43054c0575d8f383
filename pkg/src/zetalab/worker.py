"""
Standalone case runner for process-pool execution.

Cases are (kind, payload) pairs whose payload holds only JSON-like data, so
they can be shipped to a subprocess; the input document is re-validated there.
"""


def execute_case(kind, payload):
    """
    Run one verification case.

    Args:
        kind (str): "verify", "laws" or "surface"
        payload (dict): {"document": dict, "gauge" or "surface": str, "weight": int, ...}

    Returns:
        dict: {"success": True, "result": dict} or
              {"success": False, "error": str, "error_type": str}
    """
    try:
        try:
            from .schema import InputDocument
            from .zeta import surface_report, twist_shift_laws, verify_theorem
        except ImportError:
            from schema import InputDocument
            from zeta import surface_report, twist_shift_laws, verify_theorem

        document = InputDocument.model_validate(payload["document"])

        if kind == "verify":
            spec = document.gauge(payload["gauge"])
            result = verify_theorem(spec, payload["weight"]).to_dict()
        elif kind == "laws":
            spec = document.gauge(payload["gauge"])
            checks = twist_shift_laws(spec, payload["twist"], payload["shift"], [payload["weight"]])
            result = {"twist": payload["twist"], "shift": payload["shift"], "checks": [c.to_dict() for c in checks]}
        elif kind == "surface":
            surface = document.surface(payload["surface"])
            result = surface_report(document.gauge(surface.gauge), surface.to_surface())
        else:
            return {
                "success": False,
                "error": f"Unknown case kind '{kind}'",
                "error_type": "ValueError",
            }

        return {
            "success": True,
            "result": result,
        }

    except Exception as e:
        return {
            "success": False,
            "error": str(e),
            "error_type": type(e).__name__,
        }
