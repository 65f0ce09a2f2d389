import logging
from collections import defaultdict
from typing import Any, Callable, Dict, List, NamedTuple

logger = logging.getLogger(__name__)


class Hook(NamedTuple):
    priority: int
    callback: Callable


class EventManager:
    """
    Hook registry coordinating study stages, inequality checks and writers.

    Components register callbacks for named events ('epsilon_completed',
    'sample_generated', ...); triggering an event runs every callback in
    priority order. A failing callback is logged and does not stop the
    others, so one broken writer cannot abort an epsilon sweep.
    """

    def __init__(self):
        self.hooks: Dict[str, List[Hook]] = defaultdict(list)

    def register_hook(self, event_name: str, callback: Callable, priority: int = 0) -> None:
        """
        Register a callback function for a specific event.

        Args:
            event_name: Name of the event to listen for
            callback: Function to call when event is triggered
            priority: Execution priority (higher numbers run first)
        """
        hooks = self.hooks[event_name]
        # Ties keep registration order
        position = next((i for i, hook in enumerate(hooks) if hook.priority < priority), len(hooks))
        hooks.insert(position, Hook(priority, callback))

    def unregister_hook(self, event_name: str, callback: Callable) -> bool:
        """
        Remove a callback from an event.

        Returns:
            True if callback was found and removed, False otherwise
        """
        hooks = self.hooks.get(event_name, [])
        for i, hook in enumerate(hooks):
            if hook.callback == callback:
                del hooks[i]
                return True
        return False

    def _call(self, event_name: str, hook: Hook, *args, **kwargs) -> Any:
        try:
            return hook.callback(*args, **kwargs)
        except Exception as e:
            name = getattr(hook.callback, '__qualname__', repr(hook.callback))
            logger.error(f"EventManager: callback for '{event_name}' failed in {name}: {e}")
            return None

    def trigger_event(self, event_name: str, *args, **kwargs) -> List[Any]:
        """
        Execute all callbacks registered for an event.

        Args:
            event_name: Name of the event to trigger
            *args: Positional arguments to pass to callbacks
            **kwargs: Keyword arguments to pass to callbacks

        Returns:
            List of return values (None for callbacks that raised)
        """
        return [self._call(event_name, hook, *args, **kwargs) for hook in list(self.hooks.get(event_name, []))]

    def has_listeners(self, event_name: str) -> bool:
        return bool(self.hooks.get(event_name))

    def get_event_names(self) -> List[str]:
        """Names of all events with registered callbacks."""
        return [name for name, hooks in self.hooks.items() if hooks]

    def clear_event(self, event_name: str) -> None:
        self.hooks.pop(event_name, None)

    def clear_all(self) -> None:
        self.hooks.clear()

    def trigger_event_chain(self, event_name: str, initial_context: dict, *args, **kwargs) -> dict:
        """
        Execute callbacks in chain, passing accumulated context to each handler.

        A callback returning a dict has it merged into the context seen by the
        next callback (used to assemble one row from several contributors).

        Args:
            event_name: Name of the event to trigger
            initial_context: Context passed to the first callback
            *args: Additional positional arguments to pass to callbacks
            **kwargs: Additional keyword arguments to pass to callbacks

        Returns:
            Final context dictionary after all callbacks have executed
        """
        context = dict(initial_context)
        for hook in list(self.hooks.get(event_name, [])):
            update = self._call(event_name, hook, context, *args, **kwargs)
            if isinstance(update, dict):
                context.update(update)
        return context
