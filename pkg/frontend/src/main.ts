/** Entry point: mount the chat on #app.
 *
 * The service base URL is the page origin by default; when the page is
 * served separately from the API, point at it with ?api=http://host:port.
 */

import { ChatApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const root = document.getElementById("app");
if (root !== null) {
  const app = new ChatApp(root, {
    baseUrl: params.get("api") ?? "",
    storage: window.localStorage,
  });
  void app.start();
}
