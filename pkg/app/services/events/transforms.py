"""Transformações de fluxos de eventos."""

from app.services.events.models import EventStream


def reverse_time(stream: EventStream) -> EventStream:
    """
    Inverte o fluxo no tempo: o evento i vira (x_i, y_i, max_j(t_j) - t_i, p_i).

    A polaridade não é trocada. Como o fluxo de entrada já está ordenado, basta
    percorrer os eventos de trás para frente para manter os timestamps não
    decrescentes; empates ficam na ordem inversa, e a dupla inversão devolve a
    ordem original.
    """
    t_max = stream.t_max
    return EventStream(
        x=stream.x[::-1].copy(),
        y=stream.y[::-1].copy(),
        t=(t_max - stream.t[::-1]).copy(),
        p=stream.p[::-1].copy(),
        sensor_width=stream.sensor_width,
        sensor_height=stream.sensor_height,
    )
